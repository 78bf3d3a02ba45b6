#pragma once
// Arbitrary-precision reference implementations of the scoring formulas,
// independent of the production code paths they check. 256-bit MPFR.
#include <mpfr.h>

#include <cstdint>

namespace engram::oracle {

constexpr mpfr_prec_t kPrec = 256;

inline double temporal_relevance_hp(std::int64_t ms, std::int64_t me, std::int64_t ks, std::int64_t ke,
                                    double lambda, double epsilon) {
    mpfr_t hull, denom, overlap, cm, ck, dist, term1, term2, t, tmp;
    mpfr_inits2(kPrec, hull, denom, overlap, cm, ck, dist, term1, term2, t, tmp, (mpfr_ptr)nullptr);

    const std::int64_t lo = ms < ks ? ms : ks;
    const std::int64_t hi = me > ke ? me : ke;
    mpfr_set_sj(hull, hi - lo, MPFR_RNDN);
    mpfr_set_d(tmp, epsilon, MPFR_RNDN);
    mpfr_add(denom, hull, tmp, MPFR_RNDN);

    const std::int64_t olo = ms > ks ? ms : ks;
    const std::int64_t ohi = me < ke ? me : ke;
    mpfr_set_sj(overlap, ohi > olo ? ohi - olo : 0, MPFR_RNDN);

    // centers as exact halves
    mpfr_set_sj(cm, ms + me, MPFR_RNDN);
    mpfr_div_ui(cm, cm, 2, MPFR_RNDN);
    mpfr_set_sj(ck, ks + ke, MPFR_RNDN);
    mpfr_div_ui(ck, ck, 2, MPFR_RNDN);
    mpfr_sub(dist, cm, ck, MPFR_RNDN);
    mpfr_abs(dist, dist, MPFR_RNDN);

    mpfr_div(term1, overlap, denom, MPFR_RNDN);
    mpfr_mul_d(term1, term1, lambda, MPFR_RNDN);

    mpfr_div(term2, dist, denom, MPFR_RNDN);
    mpfr_ui_sub(term2, 1, term2, MPFR_RNDN);
    mpfr_mul_d(term2, term2, 1.0 - lambda, MPFR_RNDN);

    mpfr_add(t, term1, term2, MPFR_RNDN);
    if (mpfr_cmp_ui(t, 0) < 0) mpfr_set_ui(t, 0, MPFR_RNDN);
    if (mpfr_cmp_ui(t, 1) > 0) mpfr_set_ui(t, 1, MPFR_RNDN);

    const double out = mpfr_get_d(t, MPFR_RNDN);
    mpfr_clears(hull, denom, overlap, cm, ck, dist, term1, term2, t, tmp, (mpfr_ptr)nullptr);
    return out;
}

inline double memory_robustness_hp(std::int64_t now, std::int64_t last, double reinforcements,
                                   double tau_seconds, double eta) {
    mpfr_t elapsed, scale, n, tmp, r;
    mpfr_inits2(kPrec, elapsed, scale, n, tmp, r, (mpfr_ptr)nullptr);
    mpfr_set_sj(elapsed, now - last < 0 ? 0 : now - last, MPFR_RNDN);
    mpfr_set_d(n, reinforcements < 0 ? 0 : reinforcements, MPFR_RNDN);
    mpfr_log1p(tmp, n, MPFR_RNDN);
    mpfr_mul_d(tmp, tmp, eta, MPFR_RNDN);
    mpfr_add_ui(tmp, tmp, 1, MPFR_RNDN);
    mpfr_set_d(scale, tau_seconds, MPFR_RNDN);
    mpfr_mul(scale, scale, tmp, MPFR_RNDN);
    mpfr_div(r, elapsed, scale, MPFR_RNDN);
    mpfr_neg(r, r, MPFR_RNDN);
    mpfr_exp(r, r, MPFR_RNDN);
    const double out = mpfr_get_d(r, MPFR_RNDN);
    mpfr_clears(elapsed, scale, n, tmp, r, (mpfr_ptr)nullptr);
    return out;
}

}  // namespace engram::oracle
