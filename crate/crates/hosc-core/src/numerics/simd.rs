//! Vectorized elementwise transcendentals for the batched training path.
//!
//! Full-batch fitting spends most of its time in `sin`/`cos`/`tanh` over
//! multi-megabyte preactivation buffers; the scalar libm `tanh` alone costs
//! ~30ns per call. These kernels process four lanes at a time with AVX2+FMA
//! when the CPU supports it and fall back to scalar libm otherwise. Accuracy
//! is a few ulp (validated against libm in the tests); the scalar closed-form
//! API in `activations` keeps using libm directly.
//!
//! Argument ranges: `sincos` handles |x| <= 1e6 in the vector path and
//! delegates larger (or non-finite) inputs to libm; `exp` covers the full
//! finite range with overflow/underflow masks; `tanh` is total.

/// Cody-Waite split of pi/2: A and B have 27 trailing zero bits, so k*A and
/// k*B are exact for quadrant counts |k| < 2^26.
const PIO2_A: f64 = f64_bits(0x3FF921FB50000000);
const PIO2_B: f64 = f64_bits(0x3E5110B460000000);
const PIO2_C: f64 = f64_bits(0x3C91A62633145C07);
const FRAC_2_PI: f64 = 6.36619772367581382433e-1;
/// Beyond this the quadrant count would outgrow the exact-product budget.
const SINCOS_VECTOR_LIMIT: f64 = 1.0e6;

/// Cody-Waite split of ln(2); HI has 27 trailing zero bits.
const LN2_HI: f64 = f64_bits(0x3FE62E42F8000000);
const LN2_LO: f64 = f64_bits(0x3E4BE8E7BCD5E4F2);
const LOG2E: f64 = 1.44269504088896338700e0;

/// sin(r) ~ r + r^3 * S(r^2) on [-pi/4, pi/4] (fdlibm kernel coefficients).
const S: [f64; 6] = [
    -1.66666666666666324348e-01,
    8.33333333332248946124e-03,
    -1.98412698298579493134e-04,
    2.75573137070700676789e-06,
    -2.50507602534068634195e-08,
    1.58969099521155010221e-10,
];

/// cos(r) ~ 1 - r^2/2 + r^4 * C(r^2) on [-pi/4, pi/4].
const C: [f64; 6] = [
    4.16666666666666019037e-02,
    -1.38888888888741095749e-03,
    2.48015872894767294178e-05,
    -2.75573143513906633035e-07,
    2.08757232129817482790e-09,
    -1.13596475577881948265e-11,
];

/// 1/k! for k = 0..=13; degree-13 Taylor of exp on [-ln2/2, ln2/2].
const EXP_COEFF: [f64; 14] = [
    1.0,
    1.0,
    1.0 / 2.0,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5040.0,
    1.0 / 40320.0,
    1.0 / 362880.0,
    1.0 / 3628800.0,
    1.0 / 39916800.0,
    1.0 / 479001600.0,
    1.0 / 6227020800.0,
];

const fn f64_bits(b: u64) -> f64 {
    f64::from_bits(b)
}

#[cfg(target_arch = "x86_64")]
fn have_avx2_fma() -> bool {
    use std::sync::OnceLock;
    static FLAG: OnceLock<bool> = OnceLock::new();
    *FLAG.get_or_init(|| {
        std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma")
    })
}

/// Writes `sin(x)` and `cos(x)` for every element of `xs`.
pub fn sincos_slice(xs: &[f64], sin_out: &mut [f64], cos_out: &mut [f64]) {
    assert_eq!(xs.len(), sin_out.len());
    assert_eq!(xs.len(), cos_out.len());
    #[cfg(target_arch = "x86_64")]
    if have_avx2_fma() {
        unsafe { avx2::sincos(xs, sin_out, cos_out) };
        return;
    }
    for ((x, s), c) in xs.iter().zip(sin_out.iter_mut()).zip(cos_out.iter_mut()) {
        *s = x.sin();
        *c = x.cos();
    }
}

/// Writes `tanh(x)` for every element of `xs`.
pub fn tanh_slice(xs: &[f64], out: &mut [f64]) {
    assert_eq!(xs.len(), out.len());
    #[cfg(target_arch = "x86_64")]
    if have_avx2_fma() {
        unsafe { avx2::tanh(xs, out) };
        return;
    }
    for (x, o) in xs.iter().zip(out.iter_mut()) {
        *o = x.tanh();
    }
}

/// Writes `exp(x)` for every element of `xs`.
pub fn exp_slice(xs: &[f64], out: &mut [f64]) {
    assert_eq!(xs.len(), out.len());
    #[cfg(target_arch = "x86_64")]
    if have_avx2_fma() {
        unsafe { avx2::exp(xs, out) };
        return;
    }
    for (x, o) in xs.iter().zip(out.iter_mut()) {
        *o = x.exp();
    }
}

#[cfg(target_arch = "x86_64")]
mod avx2 {
    use super::*;
    use std::arch::x86_64::*;

    const SIGN_BIT: u64 = 0x8000_0000_0000_0000;

    #[inline]
    unsafe fn abs_pd(v: __m256d) -> __m256d {
        _mm256_andnot_pd(_mm256_set1_pd(f64::from_bits(SIGN_BIT)), v)
    }

    /// Polynomial kernels on the reduced argument; shared by sincos.
    #[inline]
    unsafe fn sin_cos_kernels(r: __m256d) -> (__m256d, __m256d) {
        let z = _mm256_mul_pd(r, r);
        let mut sp = _mm256_set1_pd(S[5]);
        for c in S[..5].iter().rev() {
            sp = _mm256_fmadd_pd(sp, z, _mm256_set1_pd(*c));
        }
        // r + r*z*S(z)
        let s = _mm256_fmadd_pd(_mm256_mul_pd(r, z), sp, r);

        let mut cp = _mm256_set1_pd(C[5]);
        for c in C[..5].iter().rev() {
            cp = _mm256_fmadd_pd(cp, z, _mm256_set1_pd(*c));
        }
        // 1 - z/2 + z^2*C(z)
        let w = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, _mm256_set1_pd(1.0));
        let c = _mm256_fmadd_pd(_mm256_mul_pd(z, z), cp, w);
        (s, c)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn sincos(xs: &[f64], sin_out: &mut [f64], cos_out: &mut [f64]) {
        let n = xs.len();
        let mut i = 0;
        while i + 4 <= n {
            let u = _mm256_loadu_pd(xs.as_ptr().add(i));
            let over = _mm256_cmp_pd::<_CMP_NLE_UQ>(abs_pd(u), _mm256_set1_pd(SINCOS_VECTOR_LIMIT));
            if _mm256_movemask_pd(over) != 0 {
                // Huge or non-finite argument somewhere in the block.
                for l in i..i + 4 {
                    sin_out[l] = xs[l].sin();
                    cos_out[l] = xs[l].cos();
                }
                i += 4;
                continue;
            }
            let k = _mm256_round_pd::<{ _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC }>(
                _mm256_mul_pd(u, _mm256_set1_pd(FRAC_2_PI)),
            );
            let mut r = _mm256_fnmadd_pd(k, _mm256_set1_pd(PIO2_A), u);
            r = _mm256_fnmadd_pd(k, _mm256_set1_pd(PIO2_B), r);
            r = _mm256_fnmadd_pd(k, _mm256_set1_pd(PIO2_C), r);
            let (s, c) = sin_cos_kernels(r);

            // Quadrant selection from the integer value of k.
            let mut karr = [0.0f64; 4];
            _mm256_storeu_pd(karr.as_mut_ptr(), k);
            let mut swap = [0u64; 4];
            let mut ssign = [0u64; 4];
            let mut csign = [0u64; 4];
            for (l, kf) in karr.iter().enumerate() {
                let q = *kf as i64 as u64;
                let b0 = q & 1;
                let b1 = (q >> 1) & 1;
                swap[l] = if b0 != 0 { u64::MAX } else { 0 };
                ssign[l] = b1 << 63;
                csign[l] = (b0 ^ b1) << 63;
            }
            let swap_m = _mm256_castsi256_pd(_mm256_loadu_si256(swap.as_ptr() as *const __m256i));
            let ssign_m = _mm256_castsi256_pd(_mm256_loadu_si256(ssign.as_ptr() as *const __m256i));
            let csign_m = _mm256_castsi256_pd(_mm256_loadu_si256(csign.as_ptr() as *const __m256i));
            let sin_v = _mm256_xor_pd(_mm256_blendv_pd(s, c, swap_m), ssign_m);
            let cos_v = _mm256_xor_pd(_mm256_blendv_pd(c, s, swap_m), csign_m);
            _mm256_storeu_pd(sin_out.as_mut_ptr().add(i), sin_v);
            _mm256_storeu_pd(cos_out.as_mut_ptr().add(i), cos_v);
            i += 4;
        }
        for l in i..n {
            sin_out[l] = xs[l].sin();
            cos_out[l] = xs[l].cos();
        }
    }

    /// exp on four lanes; valid over the full finite range with saturation.
    #[inline]
    unsafe fn exp_pd(y: __m256d) -> __m256d {
        let k = _mm256_round_pd::<{ _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC }>(
            _mm256_mul_pd(y, _mm256_set1_pd(LOG2E)),
        );
        let mut r = _mm256_fnmadd_pd(k, _mm256_set1_pd(LN2_HI), y);
        r = _mm256_fnmadd_pd(k, _mm256_set1_pd(LN2_LO), r);
        let mut p = _mm256_set1_pd(EXP_COEFF[13]);
        for c in EXP_COEFF[..13].iter().rev() {
            p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(*c));
        }
        // 2^k through the exponent bits; k is in [-1075, 1025] here.
        let ki = _mm256_cvtpd_epi32(k);
        let kl = _mm256_cvtepi32_epi64(ki);
        let biased = _mm256_add_epi64(kl, _mm256_set1_epi64x(1023));
        let scale = _mm256_castsi256_pd(_mm256_slli_epi64::<52>(biased));
        let val = _mm256_mul_pd(p, scale);
        // Saturate: exp underflows to 0 below ~-745 and overflows above ~709.8.
        let lo = _mm256_cmp_pd::<_CMP_LT_OQ>(y, _mm256_set1_pd(-708.0));
        let hi = _mm256_cmp_pd::<_CMP_GT_OQ>(y, _mm256_set1_pd(709.0));
        let val = _mm256_blendv_pd(val, _mm256_setzero_pd(), lo);
        let val = _mm256_blendv_pd(val, _mm256_set1_pd(f64::INFINITY), hi);
        // Preserve NaN inputs.
        let nan = _mm256_cmp_pd::<_CMP_UNORD_Q>(y, y);
        _mm256_blendv_pd(val, y, nan)
    }

    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn exp(xs: &[f64], out: &mut [f64]) {
        let n = xs.len();
        let mut i = 0;
        while i + 4 <= n {
            let y = _mm256_loadu_pd(xs.as_ptr().add(i));
            _mm256_storeu_pd(out.as_mut_ptr().add(i), exp_pd(y));
            i += 4;
        }
        for l in i..n {
            out[l] = xs[l].exp();
        }
    }

    /// expm1 on [-0.35, 0] via the Taylor tail (no cancellation for small y).
    #[inline]
    unsafe fn expm1_small_pd(y: __m256d) -> __m256d {
        let mut p = _mm256_set1_pd(EXP_COEFF[13]);
        for c in EXP_COEFF[1..13].iter().rev() {
            p = _mm256_fmadd_pd(p, y, _mm256_set1_pd(*c));
        }
        _mm256_mul_pd(y, p)
    }

    /// tanh(x) = -t / (t + 2) with t = expm1(-2|x|), sign restored at the end.
    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn tanh(xs: &[f64], out: &mut [f64]) {
        let n = xs.len();
        let mut i = 0;
        while i + 4 <= n {
            let x = _mm256_loadu_pd(xs.as_ptr().add(i));
            let sign = _mm256_and_pd(x, _mm256_set1_pd(f64::from_bits(SIGN_BIT)));
            let a = _mm256_min_pd(abs_pd(x), _mm256_set1_pd(20.0));
            let y = _mm256_mul_pd(a, _mm256_set1_pd(-2.0));
            let small = _mm256_cmp_pd::<_CMP_GE_OQ>(y, _mm256_set1_pd(-0.35));
            let t_small = expm1_small_pd(y);
            let t_big = _mm256_sub_pd(exp_pd(y), _mm256_set1_pd(1.0));
            let t = _mm256_blendv_pd(t_big, t_small, small);
            let r = _mm256_div_pd(
                _mm256_xor_pd(t, _mm256_set1_pd(f64::from_bits(SIGN_BIT))),
                _mm256_add_pd(t, _mm256_set1_pd(2.0)),
            );
            let r = _mm256_or_pd(r, sign);
            // Preserve NaN inputs (min/abs would otherwise launder them).
            let nan = _mm256_cmp_pd::<_CMP_UNORD_Q>(x, x);
            let r = _mm256_blendv_pd(r, x, nan);
            _mm256_storeu_pd(out.as_mut_ptr().add(i), r);
            i += 4;
        }
        for l in i..n {
            out[l] = xs[l].tanh();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn max_rel_err(got: &[f64], want: &[f64]) -> f64 {
        got.iter()
            .zip(want)
            .map(|(g, w)| {
                if *w == 0.0 {
                    g.abs()
                } else {
                    (g - w).abs() / w.abs().max(1e-300)
                }
            })
            .fold(0.0f64, f64::max)
    }

    #[test]
    fn sincos_matches_libm() {
        let mut rng = Rng::new(2024);
        let mut xs: Vec<f64> = (0..40_000).map(|_| rng.uniform_in(-2000.0, 2000.0)).collect();
        // Near-quadrant points and large arguments stress the reduction.
        for k in -50i64..50 {
            xs.push(k as f64 * std::f64::consts::FRAC_PI_2 + 1e-13);
        }
        xs.extend_from_slice(&[0.0, -0.0, 1e-300, 9.9e5, -9.9e5, 3.3e6, 1e12, f64::INFINITY]);
        let mut s = vec![0.0; xs.len()];
        let mut c = vec![0.0; xs.len()];
        sincos_slice(&xs, &mut s, &mut c);
        let sref: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let cref: Vec<f64> = xs.iter().map(|x| x.cos()).collect();
        // Compare absolutely: sin/cos are bounded by 1 and relative error
        // blows up at the zeros where absolute error is what matters.
        for i in 0..xs.len() {
            assert!(
                (s[i] - sref[i]).abs() <= 2e-15 || (s[i].is_nan() && sref[i].is_nan()),
                "sin({}) = {} vs libm {}",
                xs[i],
                s[i],
                sref[i]
            );
            assert!(
                (c[i] - cref[i]).abs() <= 2e-15 || (c[i].is_nan() && cref[i].is_nan()),
                "cos({}) = {} vs libm {}",
                xs[i],
                c[i],
                cref[i]
            );
        }
    }

    #[test]
    fn sincos_small_arguments_are_relatively_accurate() {
        let mut rng = Rng::new(7);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.uniform_in(-1e-3, 1e-3)).collect();
        let mut s = vec![0.0; xs.len()];
        let mut c = vec![0.0; xs.len()];
        sincos_slice(&xs, &mut s, &mut c);
        let sref: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        assert!(max_rel_err(&s, &sref) <= 1e-15, "rel err {}", max_rel_err(&s, &sref));
    }

    #[test]
    fn tanh_matches_libm() {
        let mut rng = Rng::new(55);
        let mut xs: Vec<f64> = (0..40_000).map(|_| rng.uniform_in(-30.0, 30.0)).collect();
        xs.extend((0..10_000).map(|_| rng.uniform_in(-0.4, 0.4)));
        xs.extend((0..1_000).map(|_| rng.uniform_in(-1e-6, 1e-6)));
        xs.extend_from_slice(&[0.0, -0.0, 25.0, -25.0, 1e9, -1e9, f64::NAN, f64::INFINITY]);
        let mut out = vec![0.0; xs.len()];
        tanh_slice(&xs, &mut out);
        for (x, o) in xs.iter().zip(&out) {
            let r = x.tanh();
            if r.is_nan() {
                assert!(o.is_nan());
            } else {
                let err = (o - r).abs() / r.abs().max(1e-300);
                assert!(err <= 2e-15 || (o - r).abs() <= 1e-300, "tanh({x}) = {o} vs libm {r}");
            }
        }
    }

    #[test]
    fn exp_matches_libm() {
        let mut rng = Rng::new(91);
        let mut xs: Vec<f64> = (0..40_000).map(|_| rng.uniform_in(-700.0, 700.0)).collect();
        xs.extend((0..10_000).map(|_| rng.uniform_in(-1.0, 1.0)));
        xs.extend_from_slice(&[0.0, -745.0, -800.0, 709.0, 710.0, f64::NAN]);
        let mut out = vec![0.0; xs.len()];
        exp_slice(&xs, &mut out);
        for (x, o) in xs.iter().zip(&out) {
            let r = x.exp();
            if r.is_nan() {
                assert!(o.is_nan());
            } else if r == 0.0 || r.is_infinite() {
                assert_eq!(*o, r, "exp({x})");
            } else {
                let err = (o - r).abs() / r;
                assert!(err <= 2e-15, "exp({x}) = {o} vs libm {r} (rel {err})");
            }
        }
    }
}
