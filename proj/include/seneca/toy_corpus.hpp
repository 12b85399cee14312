#pragma once

#include <cstdint>
#include <vector>

#include "seneca/text.hpp"

namespace seneca::toy {

// Synthetic news-like articles. Each article narrates a chain of events where
// consecutive events share exactly one actor or object; entity-free filler
// sentences are interleaved. The reference summary is a compressed version of
// the first three or four chain events, so consecutive summary sentences share
// an entity and non-adjacent ones do not.
std::vector<text::RawArticle> make_toy_corpus(std::uint64_t seed, std::size_t size);

// Articles whose single-sentence reference appears verbatim as one sentence
// (never the first) among unrelated chain sentences.
std::vector<text::RawArticle> make_planted_corpus(std::uint64_t seed, std::size_t size);

// Index of the planted sentence in an article from make_planted_corpus.
std::size_t planted_index(const text::RawArticle& article);

std::vector<text::Article> tokenize_corpus(const std::vector<text::RawArticle>& raw);

}  // namespace seneca::toy
