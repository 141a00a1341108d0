#pragma once

#include "collectiva/core.hpp"

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace collectiva {

/// Index of a label within its alphabet.
using Label = std::uint16_t;

class LabelAlphabet {
public:
    explicit LabelAlphabet(std::vector<std::string> labels) : labels_(std::move(labels)) {
        if (labels_.size() < 2) throw input_error("label alphabet needs at least two labels");
        if (labels_.size() > 65536) throw capacity_error("label alphabet limited to 65536 labels");
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (!index_.emplace(labels_[i], static_cast<Label>(i)).second)
                throw input_error("duplicate label '" + labels_[i] + "'");
    }

    static LabelAlphabet binary() { return LabelAlphabet({"0", "1"}); }

    std::size_t size() const { return labels_.size(); }
    const std::string& name(Label l) const { return labels_.at(l); }
    const std::vector<std::string>& labels() const { return labels_; }

    Label index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw input_error("label '" + name + "' not in alphabet");
        return it->second;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    friend bool operator==(const LabelAlphabet& a, const LabelAlphabet& b) { return a.labels_ == b.labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, Label> index_;
};

/// Finite prefix x_1..x_N of a sequence of trials. Immutable.
class TrialSequence {
public:
    TrialSequence(LabelAlphabet alphabet, std::vector<Label> data)
        : alphabet_(std::move(alphabet)), data_(std::move(data)) {
        for (auto l : data_)
            if (l >= alphabet_.size()) throw input_error("trial label outside the alphabet");
    }

    /// Binary sequence over {"0","1"} from 0/1 values.
    static TrialSequence from_bits(const std::vector<std::uint8_t>& bits) {
        std::vector<Label> d(bits.begin(), bits.end());
        return TrialSequence(LabelAlphabet::binary(), std::move(d));
    }

    const LabelAlphabet& alphabet() const { return alphabet_; }
    std::span<const Label> data() const { return data_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    Label operator[](std::size_t i) const { return data_[i]; }

    /// 0/1 view for binary alphabets; the second label counts as 1.
    std::vector<std::uint8_t> bits() const {
        if (alphabet_.size() != 2) throw input_error("binary alphabet required");
        return {data_.begin(), data_.end()};
    }

    TrialSequence prefix(std::size_t n) const {
        return TrialSequence(alphabet_, std::vector<Label>(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(std::min(n, data_.size()))));
    }

    friend bool operator==(const TrialSequence& a, const TrialSequence& b) {
        return a.alphabet_ == b.alphabet_ && a.data_ == b.data_;
    }

private:
    LabelAlphabet alphabet_;
    std::vector<Label> data_;
};

}  // namespace collectiva
