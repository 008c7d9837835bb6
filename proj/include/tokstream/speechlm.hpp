#pragma once

// Stand-ins for the SpeechLM side: sequence layout, NLL, vocabulary growth,
// embedding extension and a paced, batched token generator.

#include <tokstream/rng.hpp>
#include <tokstream/sampler.hpp>
#include <tokstream/timebase.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

namespace tokstream {

/// Combined text + audio + special vocabulary.
struct VocabLayout {
    std::uint32_t text_vocab = 128256;
    std::uint32_t audio_tokens = kCodebookSize;
    std::uint32_t special_tokens = 29;

    std::uint32_t audio_offset() const { return text_vocab; }
    std::uint32_t special_offset() const { return text_vocab + audio_tokens; }
    std::uint32_t raw_size() const { return text_vocab + audio_tokens + special_tokens; }
};

struct SpecialTokens {
    std::uint32_t begin_of_text;
    std::uint32_t speech_start;
    std::uint32_t speech_end;

    static SpecialTokens for_layout(const VocabLayout& v = {}) {
        const auto base = v.special_offset();
        return {base, base + 1, base + 2};
    }
};

/// [begin_of_text, text..., speech_start, audio..., speech_end]; audio ids are
/// shifted into the combined vocabulary by `layout.audio_offset()`.
inline std::vector<std::uint32_t> build_training_sequence(std::span<const std::uint32_t> text_tokens,
                                                          std::span<const TokenId> audio_tokens,
                                                          const SpecialTokens& s,
                                                          const VocabLayout& layout = {}) {
    detail::require(!text_tokens.empty() && !audio_tokens.empty(),
                    "training sequence needs text and audio tokens");
    std::vector<std::uint32_t> seq;
    seq.reserve(text_tokens.size() + audio_tokens.size() + 3);
    seq.push_back(s.begin_of_text);
    seq.insert(seq.end(), text_tokens.begin(), text_tokens.end());
    seq.push_back(s.speech_start);
    for (TokenId t : audio_tokens) seq.push_back(layout.audio_offset() + t);
    seq.push_back(s.speech_end);
    return seq;
}

/// Audio span between speech_start and speech_end, mapped back to codebook ids.
inline std::optional<TokenSequence> extract_audio_tokens(std::span<const std::uint32_t> seq,
                                                         const SpecialTokens& s,
                                                         const VocabLayout& layout = {}) {
    auto start = std::ranges::find(seq, s.speech_start);
    if (start == seq.end()) return std::nullopt;
    auto stop = std::find(start + 1, seq.end(), s.speech_end);
    if (stop == seq.end()) return std::nullopt;
    TokenSequence audio;
    for (auto it = start + 1; it != stop; ++it) {
        if (*it < layout.audio_offset() || *it >= layout.special_offset()) return std::nullopt;
        audio.push_back(static_cast<TokenId>(*it - layout.audio_offset()));
    }
    return audio;
}

/// -sum(log p) over the target audio positions.
inline double sequence_nll(std::span<const double> step_probabilities) {
    double nll = 0.0;
    for (double p : step_probabilities) {
        detail::require(p > 0.0 && p <= 1.0, "step probability must be in (0, 1]");
        nll -= std::log(p);
    }
    return nll;
}

inline std::uint64_t padded_vocab_size(std::uint64_t raw, std::uint64_t alignment) {
    detail::require(raw >= 1 && alignment >= 1, "padded_vocab_size needs positive arguments");
    return (raw + alignment - 1) / alignment * alignment;
}

/// Append `n_new` rows drawn from N(mean, cov) of the existing rows (sample
/// covariance, divisor rows-1). Cholesky first; if the covariance is only
/// semi-definite, an eigendecomposition with eigenvalues clamped at zero.
/// Columns with zero variance receive the column mean exactly.
inline Eigen::MatrixXd extend_embeddings(const Eigen::MatrixXd& matrix, std::size_t n_new, Rng& rng) {
    detail::require(matrix.rows() >= 2, "extend_embeddings needs at least two rows");
    const Eigen::Index rows = matrix.rows();
    const Eigen::Index dims = matrix.cols();
    Eigen::MatrixXd out(rows + static_cast<Eigen::Index>(n_new), dims);
    out.topRows(rows) = matrix;
    if (n_new == 0) return out;

    const Eigen::RowVectorXd mean = matrix.colwise().mean();
    const Eigen::MatrixXd centered = matrix.rowwise() - mean;

    std::vector<Eigen::Index> live;
    for (Eigen::Index d = 0; d < dims; ++d)
        if ((centered.col(d).array() != 0.0).any()) live.push_back(d);

    const auto k = static_cast<Eigen::Index>(live.size());
    Eigen::MatrixXd sub(rows, k);
    for (Eigen::Index j = 0; j < k; ++j) sub.col(j) = centered.col(live[j]);
    const Eigen::MatrixXd cov = (sub.transpose() * sub) / static_cast<double>(rows - 1);

    Eigen::MatrixXd factor(k, k);
    if (k > 0) {
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() == Eigen::Success) {
            factor = llt.matrixL();
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
            const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
            factor = eig.eigenvectors() * root.asDiagonal();
        }
    }

    Eigen::VectorXd z(k);
    for (std::size_t r = 0; r < n_new; ++r) {
        const auto row = rows + static_cast<Eigen::Index>(r);
        out.row(row) = mean;
        for (Eigen::Index j = 0; j < k; ++j) z(j) = rng.normal();
        const Eigen::VectorXd draw = factor * z;
        for (Eigen::Index j = 0; j < k; ++j) out(row, live[j]) += draw(j);
    }
    return out;
}

struct GeneratorOptions {
    std::uint64_t seed = 0;
    std::size_t n_tokens = 0;
    std::chrono::duration<double> pace{0.0}; // per token
    std::size_t batch_tokens = 10;          // tokens per scheduling step
    SamplerConfig sampler{};
    /// Per-token voicing plan; empty means every token is voiced.
    std::vector<bool> voiced;
};

/// Deterministic, paced token source. Each call to `next_batch` is one
/// scheduling step: it produces up to `batch_tokens` tokens once their
/// simulated generation time has elapsed, measured from the first call.
///
/// Voiced tokens are sampled over a 224-id candidate set (codebook ids
/// 32..255, amplitude >= 0.125 under the mock decoder) from seed-dependent
/// synthetic logits with repetition penalties over sparse counts. Unvoiced
/// tokens are id 0.
class MockGenerator {
public:
    static constexpr std::uint32_t kCandidates = 224;
    static constexpr TokenId kFirstVoicedId = 32;

    explicit MockGenerator(GeneratorOptions opts) : opts_(std::move(opts)), rng_(opts_.seed) {
        opts_.sampler.validate();
        if (opts_.batch_tokens < 1) throw ConfigError("batch_tokens must be >= 1");
        if (opts_.pace.count() < 0) throw ConfigError("pace must be >= 0");
        if (!opts_.voiced.empty() && opts_.voiced.size() != opts_.n_tokens)
            throw ConfigError("voicing plan length must equal n_tokens");
        phase_ = rng_.uniform(0.0, 6.283185307179586);
    }

    bool done() const { return produced_ >= opts_.n_tokens; }
    std::size_t steps() const { return steps_; }
    std::size_t produced() const { return produced_; }

    std::optional<TokenSequence> next_batch() {
        if (done()) return std::nullopt;
        const std::size_t n = std::min(opts_.batch_tokens, opts_.n_tokens - produced_);
        if (opts_.pace.count() > 0) {
            const auto now = std::chrono::steady_clock::now();
            if (steps_ == 0) start_ = now;
            const auto due = start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                          opts_.pace * static_cast<double>(produced_ + n));
            std::this_thread::sleep_until(due);
        }
        TokenSequence batch;
        batch.reserve(n);
        for (std::size_t i = 0; i < n; ++i) batch.push_back(next_token());
        ++steps_;
        return batch;
    }

    /// All remaining tokens, ignoring pace.
    TokenSequence drain() {
        TokenSequence all;
        while (!done()) all.push_back(next_token());
        return all;
    }

private:
    TokenId next_token() {
        const std::size_t pos = produced_++;
        if (!opts_.voiced.empty() && !opts_.voiced[pos]) return 0;
        Logits logits(kCandidates);
        for (std::uint32_t j = 0; j < kCandidates; ++j)
            logits[j] = 2.0 * std::sin(0.37 * j + 0.11 * static_cast<double>(pos) + phase_);
        logits = apply_penalties(std::move(logits), counts_, opts_.sampler.repetition_penalty);
        const auto pick = sample(logits, opts_.sampler, rng_);
        counts_.add(pick);
        return static_cast<TokenId>(kFirstVoicedId + pick);
    }

    GeneratorOptions opts_;
    Rng rng_;
    double phase_ = 0.0;
    SparseCounts counts_;
    std::size_t produced_ = 0;
    std::size_t steps_ = 0;
    std::chrono::steady_clock::time_point start_{};
};

/// Convenience: the whole stream of `n_tokens` voiced tokens for `seed`.
inline TokenSequence mock_generate(std::uint64_t seed, std::size_t n_tokens) {
    GeneratorOptions o;
    o.seed = seed;
    o.n_tokens = n_tokens;
    return MockGenerator(o).drain();
}

} // namespace tokstream
