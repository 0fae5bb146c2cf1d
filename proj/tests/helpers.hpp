#pragma once

#include <random>
#include <string>
#include <vector>

#include "steersum/simplex.hpp"
#include "steersum/vocab.hpp"

namespace steersum::test {

/// [<pad>, <bos>, <eos>, <sep>, w0, w1, ...] with `extra` plain words.
inline Vocabulary make_vocab(int extra) {
    std::vector<std::string> words;
    for (int i = 0; i < extra; ++i) words.push_back("w" + std::to_string(i));
    return Vocabulary::with_specials(words);
}

inline std::vector<int> random_tokens(std::mt19937_64& rng, const Vocabulary& vocab, std::size_t len) {
    std::uniform_int_distribution<int> pick(0, vocab.size() - 1);
    std::vector<int> out(len);
    for (auto& t : out) t = pick(rng);
    return out;
}

inline SimplexSequence random_sequence(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double k,
                                       double logit_scale = 1.0) {
    Matrix<double> m(rows, cols);
    std::normal_distribution<double> gauss(0.0, logit_scale);
    for (auto& v : m.data) v = gauss(rng);
    return SimplexSequence(std::move(m), k, std::vector<Role>(rows, Role::Summary));
}

}  // namespace steersum::test
