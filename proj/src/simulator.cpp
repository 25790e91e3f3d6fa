#include "uma/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uma/alarm_bound.hpp"
#include "uma/special_math.hpp"

namespace uma {

namespace {

int draw_binomial(long long K, double p, Rng& rng) {
    int c = 0;
    for (long long i = 0; i < K; ++i)
        if (rng.uniform() < p) ++c;
    return c;
}

void fill_gaussian(std::vector<double>& v, double stddev, Rng& rng) {
    for (auto& x : v) x = stddev * rng.normal();
}

double norm_sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

// Exact list decoder: branch and bound over fixed-size subsets, children
// ordered by the matched-filter residual score, completion bound from the
// top partial scores with the nonnegative quadratic term dropped. Falls
// back to the best list found when the node budget runs out (flagged).
class SubsetDecoder {
  public:
    SubsetDecoder(const std::vector<std::vector<double>>& codebook,
                  const std::vector<double>& y, std::uint64_t max_nodes)
        : cb_(codebook), m_(static_cast<int>(codebook.size())),
          n_(static_cast<int>(y.size())), max_nodes_(max_nodes) {
        a_.resize(m_);
        atilde_.resize(m_);
        diag_.resize(m_);
        row_cached_.assign(m_, false);
        rows_.resize(m_);
        for (int i = 0; i < m_; ++i) {
            double s = 0.0;
            for (int d = 0; d < n_; ++d) s += y[d] * cb_[i][d];
            a_[i] = s;
            diag_[i] = norm_sq(cb_[i]);
        }
        y_norm_ = norm_sq(y);
    }

    // best subset of size exactly k; returns objective value
    bool solve_size(int k, std::vector<int>& best_set, double& best_f) {
        k_ = k;
        in_set_.assign(m_, false);
        atilde_ = a_;
        cur_.clear();
        g_cur_ = y_norm_;
        exhausted_ = true;
        if (k == 0) {
            if (y_norm_ < best_f) {
                best_f = y_norm_;
                best_set.clear();
            }
            return true;
        }
        best_f_ = &best_f;
        best_set_ = &best_set;
        descend();
        return exhausted_;
    }

    std::uint64_t nodes_used() const { return nodes_; }

  private:
    const std::vector<double>& row(int u) {
        if (!row_cached_[u]) {
            rows_[u].resize(m_);
            for (int i = 0; i < m_; ++i) {
                double s = 0.0;
                for (int d = 0; d < n_; ++d) s += cb_[u][d] * cb_[i][d];
                rows_[u][i] = s;
            }
            row_cached_[u] = true;
        }
        return rows_[u];
    }

    // sum of the r largest atilde over candidates not in the set
    double top_sum(int r, int skip = -1) const {
        if (r <= 0) return 0.0;
        double heap[16];
        int hs = 0;
        for (int i = 0; i < m_; ++i) {
            if (in_set_[i] || i == skip) continue;
            double v = atilde_[i];
            if (hs < r) {
                heap[hs++] = v;
                for (int j = hs - 1; j > 0 && heap[j] < heap[j - 1]; --j)
                    std::swap(heap[j], heap[j - 1]);
            } else if (v > heap[0]) {
                heap[0] = v;
                int j = 0;
                while (j + 1 < r && heap[j] > heap[j + 1]) {
                    std::swap(heap[j], heap[j + 1]);
                    ++j;
                }
            }
        }
        double s = 0.0;
        for (int j = 0; j < hs; ++j) s += heap[j];
        return s;
    }

    void descend() {
        if (++nodes_ > max_nodes_) {
            exhausted_ = false;
            return;
        }
        int depth = static_cast<int>(cur_.size());
        if (depth == k_) {
            if (g_cur_ < *best_f_ ||
                (g_cur_ == *best_f_ && lex_less(cur_, *best_set_))) {
                *best_f_ = g_cur_;
                std::vector<int> s = cur_;
                std::sort(s.begin(), s.end());
                *best_set_ = s;
            }
            return;
        }
        int r = k_ - depth;
        double ts_r1 = top_sum(r - 1);
        // survivors, ordered by descending score
        struct Cand {
            double score;
            int idx;
        };
        std::vector<Cand> kids;
        kids.reserve(16);
        for (int u = 0; u < m_; ++u) {
            if (in_set_[u]) continue;
            double lb = g_cur_ - 2.0 * atilde_[u] - 2.0 * ts_r1;
            if (lb >= *best_f_) continue;
            kids.push_back({atilde_[u], u});
        }
        std::sort(kids.begin(), kids.end(),
                  [](const Cand& x, const Cand& y) {
                      return x.score > y.score || (x.score == y.score && x.idx < y.idx);
                  });
        for (const Cand& c : kids) {
            int u = c.idx;
            // re-test with the current incumbent
            if (g_cur_ - 2.0 * atilde_[u] - 2.0 * top_sum(r - 1, u) >= *best_f_) continue;
            const std::vector<double>& gr = row(u);
            double delta = -2.0 * atilde_[u] + diag_[u];
            g_cur_ += delta;
            in_set_[u] = true;
            cur_.push_back(u);
            for (int i = 0; i < m_; ++i) atilde_[i] -= gr[i];
            descend();
            for (int i = 0; i < m_; ++i) atilde_[i] += gr[i];
            cur_.pop_back();
            in_set_[u] = false;
            g_cur_ -= delta;
            if (!exhausted_) return;
        }
    }

    static bool lex_less(std::vector<int> a, const std::vector<int>& b) {
        std::sort(a.begin(), a.end());
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    }

    const std::vector<std::vector<double>>& cb_;
    int m_, n_, k_ = 0;
    std::uint64_t max_nodes_, nodes_ = 0;
    std::vector<double> a_, atilde_, diag_;
    std::vector<bool> row_cached_;
    std::vector<std::vector<double>> rows_;
    std::vector<bool> in_set_;
    std::vector<int> cur_;
    double g_cur_ = 0.0, y_norm_ = 0.0;
    double* best_f_ = nullptr;
    std::vector<int>* best_set_ = nullptr;
    bool exhausted_ = true;
};

struct AlarmDecodeResult {
    MaybeMessage message;
    int k_hat = 0;
    int k_init = 0;
};

// Two-step alarm decoding: count estimate from the energy metric, then the
// joint message/count refinement. Ties resolve to the smaller count and the
// smaller message index.
AlarmDecodeResult decode_alarm(const std::vector<std::vector<double>>& codebook,
                               const std::vector<double>& y, double metric_power, int k_lower,
                               int k_upper) {
    int n = static_cast<int>(y.size());
    double yn = norm_sq(y);
    AlarmDecodeResult res;
    double best_m = likelihood_metric_alarm(yn, 0.0, n, metric_power);
    res.k_init = 0;
    for (int k = k_lower; k <= k_upper; ++k) {
        double m = likelihood_metric_alarm(yn, static_cast<double>(k), n, metric_power);
        if (m > best_m) {
            best_m = m;
            res.k_init = k;
        }
    }
    if (res.k_init == 0) return res;  // declares no alarm

    double best_d = std::numeric_limits<double>::infinity();
    int best_w = -1, best_k = 0;
    for (std::size_t w = 0; w < codebook.size(); ++w) {
        double inner = 0.0, cn = norm_sq(codebook[w]);
        for (int d = 0; d < n; ++d) inner += y[d] * codebook[w][d];
        auto try_k = [&](int k) {
            if (k != 0 && (k < k_lower || k > k_upper)) return;
            double dist = yn - 2.0 * k * inner + static_cast<double>(k) * k * cn;
            if (dist < best_d) {
                best_d = dist;
                best_w = static_cast<int>(w);
                best_k = k;
            }
        };
        try_k(0);
        for (int k = k_lower; k <= k_upper; ++k) try_k(k);
    }
    res.k_hat = best_k;
    if (best_k > 0) res.message = static_cast<std::uint64_t>(best_w);
    return res;
}

struct StandardDecodeResult {
    std::set<std::uint64_t> list;
    int k_init = 0;
    bool heuristic = false;
};

StandardDecodeResult decode_standard(const std::vector<std::vector<double>>& codebook,
                                     const std::vector<double>& y,
                                     const StandardBlockParams& params,
                                     const DecoderBudget& budget) {
    int n = static_cast<int>(y.size());
    double yn = norm_sq(y);
    double pp = params.P_s_prime;
    StandardDecodeResult res;
    double best_m = -std::numeric_limits<double>::infinity();
    for (int k = params.k_s_lower; k <= params.k_s_upper; ++k) {
        double v = 1.0 + k * pp;
        double m = -0.5 * n * std::log(v) - yn / (2.0 * v);
        if (m > best_m) {
            best_m = m;
            res.k_init = k;
        }
    }
    int lo = std::max(params.k_s_lower, res.k_init - params.r_s);
    int hi = std::min(params.k_s_upper, res.k_init + params.r_s);
    SubsetDecoder dec(codebook, y, budget.max_nodes);
    double best_f = std::numeric_limits<double>::infinity();
    std::vector<int> best_set;
    for (int size = lo; size <= hi; ++size) {
        if (!dec.solve_size(size, best_set, best_f)) {
            res.heuristic = true;
            break;
        }
    }
    for (int i : best_set) res.list.insert(static_cast<std::uint64_t>(i));
    return res;
}

void count_list_errors(const std::vector<UserMessages>& users,
                       const std::set<std::uint64_t>& list, TrialOutcome& out) {
    std::set<std::uint64_t> sent;
    for (const auto& u : users)
        if (u.standard) sent.insert(*u.standard);
    out.distinct_sent = static_cast<int>(sent.size());
    out.list_size = static_cast<int>(list.size());
    out.md_count = 0;
    for (auto w : sent)
        if (!list.count(w)) ++out.md_count;
    out.fp_count = 0;
    for (auto w : list)
        if (!sent.count(w)) ++out.fp_count;
    out.md_fraction = out.distinct_sent ? static_cast<double>(out.md_count) / out.distinct_sent : 0.0;
    out.fp_fraction = out.list_size ? static_cast<double>(out.fp_count) / out.list_size : 0.0;
}

}  // namespace

int scaled_codeword_count_argmin(double inner_yc, double c_norm_sq, int k_max) {
    if (c_norm_sq <= 0.0) return 0;
    double k_star = inner_yc / c_norm_sq;
    long long lo = static_cast<long long>(std::floor(k_star));
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (long long k = std::max(0LL, lo - 1); k <= std::min<long long>(k_max, lo + 2); ++k) {
        double d = -2.0 * k * inner_yc + static_cast<double>(k) * k * c_norm_sq;
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    // endpoints in case the vertex falls outside [0, k_max]
    double d0 = 0.0;
    if (d0 < best_d) best = 0, best_d = d0;
    double dk = -2.0 * k_max * inner_yc + static_cast<double>(k_max) * k_max * c_norm_sq;
    if (dk < best_d) best = k_max;
    return best;
}

TrialOutcome run_alarm_block_trial(const AlarmBlockParams& params, long long M_a, long long K,
                                   bool alarm_present, Rng& rng) {
    TrialOutcome out;
    out.alarm_present = alarm_present;
    int n = params.n_a;
    std::vector<std::vector<double>> cb(static_cast<std::size_t>(M_a),
                                        std::vector<double>(n));
    double sd = std::sqrt(params.P_a_prime);
    for (auto& c : cb) fill_gaussian(c, sd, rng);

    out.k_a = alarm_present ? draw_binomial(K, params.rho_d, rng) : 0;
    std::uint64_t w_a = rng.below(static_cast<std::uint64_t>(M_a));

    std::vector<double> y(n);
    fill_gaussian(y, 1.0, rng);
    if (out.k_a > 0 && norm_sq(cb[w_a]) <= n * params.P_a) {
        for (int d = 0; d < n; ++d) y[d] += out.k_a * cb[w_a][d];
    }
    AlarmDecodeResult dec =
        decode_alarm(cb, y, params.P_a, params.k_a_lower, params.k_a_upper);
    out.decoded_alarm = dec.message;
    out.decoded_k_a = dec.k_hat;
    if (alarm_present)
        out.amd = !(dec.message && *dec.message == w_a);
    else
        out.afp = dec.message.has_value();
    return out;
}

TrialOutcome run_standard_block_trial(const StandardBlockParams& params, long long M_s_small,
                                      long long K, double rho_s, Rng& rng,
                                      const DecoderBudget& budget) {
    TrialOutcome out;
    int n = params.n_s;
    std::vector<std::vector<double>> cb(static_cast<std::size_t>(M_s_small),
                                        std::vector<double>(n));
    double sd = std::sqrt(params.P_s_prime);
    for (auto& c : cb) fill_gaussian(c, sd, rng);

    std::vector<UserMessages> users(static_cast<std::size_t>(K));
    for (auto& u : users)
        if (rng.uniform() < rho_s) u.standard = rng.below(static_cast<std::uint64_t>(M_s_small));

    std::vector<double> y(n);
    fill_gaussian(y, 1.0, rng);
    out.k_s = 0;
    for (const auto& u : users) {
        if (!u.standard) continue;
        ++out.k_s;
        const auto& c = cb[*u.standard];
        if (norm_sq(c) <= n * params.P_s)
            for (int d = 0; d < n; ++d) y[d] += c[d];
    }
    StandardDecodeResult dec = decode_standard(cb, y, params, budget);
    out.heuristic_decode = dec.heuristic;
    out.decoded_k_s = dec.k_init;
    out.decoded_list = dec.list;
    count_list_errors(users, dec.list, out);
    return out;
}

TrialOutcome run_hnoma_trial(const HnomaParams& params, long long M_a, long long M_s_small,
                             long long K, double rho_s, bool alarm_present, Rng& rng,
                             const DecoderBudget& budget) {
    TrialOutcome out;
    out.alarm_present = alarm_present;
    int n = params.n;

    std::vector<std::vector<double>> cb_a(static_cast<std::size_t>(M_a),
                                          std::vector<double>(n));
    for (auto& c : cb_a) fill_gaussian(c, std::sqrt(params.alarm.P_a_prime), rng);
    std::vector<std::vector<double>> cb_s(static_cast<std::size_t>(M_s_small),
                                          std::vector<double>(n));
    for (auto& c : cb_s) fill_gaussian(c, std::sqrt(params.standard.P_s_prime), rng);

    std::vector<UserMessages> users(static_cast<std::size_t>(K));
    std::uint64_t w_a = rng.below(static_cast<std::uint64_t>(M_a));
    for (auto& u : users) {
        if (alarm_present && rng.uniform() < params.alarm.rho_d) u.alarm = w_a;
        if (rng.uniform() < rho_s) u.standard = rng.below(static_cast<std::uint64_t>(M_s_small));
    }

    std::vector<double> y(n);
    fill_gaussian(y, 1.0, rng);
    out.k_a = 0;
    out.k_s = 0;
    bool alarm_fits = norm_sq(cb_a[w_a]) <= n * params.alarm.P_a;
    for (const auto& u : users) {
        if (u.alarm) ++out.k_a;
        if (u.standard) {
            ++out.k_s;
            const auto& c = cb_s[*u.standard];
            if (norm_sq(c) <= n * params.standard.P_s)
                for (int d = 0; d < n; ++d) y[d] += c[d];
        }
    }
    if (out.k_a > 0 && alarm_fits)
        for (int d = 0; d < n; ++d) y[d] += out.k_a * cb_a[w_a][d];

    AlarmDecodeResult adec = decode_alarm(cb_a, y, params.alarm.P_a, params.alarm.k_a_lower,
                                          params.alarm.k_a_upper);
    out.decoded_alarm = adec.message;
    out.decoded_k_a = adec.k_hat;
    if (alarm_present)
        out.amd = !(adec.message && *adec.message == w_a);
    else
        out.afp = adec.message.has_value();

    // interference cancellation with the decoded (message, count) pair
    std::vector<double> y_ic = y;
    if (adec.message && adec.k_hat > 0) {
        const auto& c = cb_a[*adec.message];
        for (int d = 0; d < n; ++d) y_ic[d] -= adec.k_hat * c[d];
    }
    StandardBlockParams sp = params.standard;
    sp.n_s = n;
    StandardDecodeResult sdec = decode_standard(cb_s, y_ic, sp, budget);
    out.heuristic_decode = sdec.heuristic;
    out.decoded_k_s = sdec.k_init;
    out.decoded_list = sdec.list;
    count_list_errors(users, sdec.list, out);
    return out;
}

ProbabilityEstimate ka_estimation_error_prob(int n, int K_s, double psi_db, double P_s, int K_a,
                                             std::uint64_t trials, const McSettings& mc,
                                             KaProbeMode mode) {
    double P_a = P_s / db_to_lin(psi_db);
    double sigma_eff_sq = 1.0 + K_s * P_s;  // interference plus unit noise
    std::uint64_t hits = 0;
    Rng rng(mc.seed, mc.stream(0x6b61u));
    for (std::uint64_t t = 0; t < trials; ++t) {
        double cn = 2.0 * P_a * rng.gamma(0.5 * n);  // ||C_a||^2
        double g = rng.normal();
        if (mode == KaProbeMode::adjacent_over) {
            // ||Y - (K_a+1)C||^2 < ||Y - K_a C||^2
            if (g * std::sqrt(sigma_eff_sq) > 0.5 * std::sqrt(cn)) ++hits;
        } else {
            double k_star = K_a + g * std::sqrt(sigma_eff_sq / cn);
            int k_hat = scaled_codeword_count_argmin(k_star * cn, cn, 4 * K_a + 64);
            if (k_hat != K_a) ++hits;
        }
    }
    return ProbabilityEstimate::from_hits(hits, trials, mc.confidence);
}

}  // namespace uma
