use nalgebra::{Complex, DMatrix};

use crate::error::{GbsError, Result};

type C64 = Complex<f64>;

/// Largest matrix size accepted by [`hafnian`]; the power-trace algorithm is
/// exact but costs `O(2^{n/2} n^4)`.
pub const MAX_HAFNIAN_SIZE: usize = 34;

/// Exact hafnian of a complex symmetric matrix: the sum over perfect matchings
/// of `∏ A_{ij}`.
///
/// Uses the power-trace method: for each subset `Z` of the `n/2` index pairs,
/// the coefficient of `x^{n/2}` in `exp(Σ_j tr((X A_Z)^j) x^j / (2j))` is
/// accumulated with an inclusion-exclusion sign. Odd-sized matrices have no
/// perfect matching and return 0 by convention; the empty matrix returns 1.
pub fn hafnian(a: &DMatrix<C64>) -> Result<C64> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(GbsError::Dimension(format!(
            "hafnian requires a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    if n > MAX_HAFNIAN_SIZE {
        return Err(GbsError::ScaleLimit(format!(
            "hafnian of size {n} exceeds the exact-evaluation budget ({MAX_HAFNIAN_SIZE})"
        )));
    }
    let m = n / 2;
    // Work on the symmetrized matrix; the hafnian only sees (A + Aᵀ)/2.
    let a = (a + a.transpose()).scale(0.5);

    let mut total = C64::new(0.0, 0.0);
    for subset in 1u64..(1u64 << m) {
        let pairs: Vec<usize> = (0..m).filter(|k| subset >> k & 1 == 1).collect();
        let z = pairs.len();
        // Rows/cols of the selected pairs, with the X swap folded in:
        // B = X A_Z where X swaps the two members of each pair.
        let mut b = DMatrix::<C64>::zeros(2 * z, 2 * z);
        for (bi, &pi) in pairs.iter().enumerate() {
            for (bj, &pj) in pairs.iter().enumerate() {
                for u in 0..2 {
                    for w in 0..2 {
                        // X swaps row 2bi <-> 2bi+1 within the pair.
                        b[(2 * bi + (1 - u), 2 * bj + w)] = a[(2 * pi + u, 2 * pj + w)];
                    }
                }
            }
        }
        // Power sums tr(B^j), j = 1..m.
        let mut traces = Vec::with_capacity(m);
        let mut p = b.clone();
        traces.push(p.trace());
        for _ in 1..m {
            p *= &b;
            traces.push(p.trace());
        }
        // f(x) = Σ_j traces[j-1]/(2j) x^j; g = exp(f) truncated at degree m,
        // via g[k] = (1/k) Σ_j j f[j] g[k-j].
        let mut f = vec![C64::new(0.0, 0.0); m + 1];
        for (j, tr) in traces.iter().enumerate() {
            f[j + 1] = tr / C64::new(2.0 * (j + 1) as f64, 0.0);
        }
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(1.0, 0.0);
        for k in 1..=m {
            let mut acc = C64::new(0.0, 0.0);
            for j in 1..=k {
                acc += C64::new(j as f64, 0.0) * f[j] * g[k - j];
            }
            g[k] = acc / C64::new(k as f64, 0.0);
        }
        let sign = if (m - z) % 2 == 0 { 1.0 } else { -1.0 };
        total += C64::new(sign, 0.0) * g[m];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    /// Brute-force perfect-matching enumeration, the independent oracle.
    fn naive_hafnian(a: &DMatrix<C64>, active: &mut Vec<usize>) -> C64 {
        if active.is_empty() {
            return C64::new(1.0, 0.0);
        }
        let i = active[0];
        let mut sum = C64::new(0.0, 0.0);
        for k in 1..active.len() {
            let j = active[k];
            let mut rest: Vec<usize> = active[1..].to_vec();
            rest.remove(k - 1);
            sum += a[(i, j)] * naive_hafnian(a, &mut rest);
        }
        sum
    }

    fn oracle(a: &DMatrix<C64>) -> C64 {
        let mut idx: Vec<usize> = (0..a.nrows()).collect();
        naive_hafnian(a, &mut idx)
    }

    #[test]
    fn empty_matrix() {
        let a = DMatrix::<C64>::zeros(0, 0);
        assert_eq!(hafnian(&a).unwrap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn odd_size_is_zero() {
        let a = DMatrix::<C64>::identity(3, 3);
        assert_eq!(hafnian(&a).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn single_matching() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        let h = hafnian(&a).unwrap();
        assert_relative_eq!(h.re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn k4_all_ones_has_three_matchings() {
        let a = DMatrix::from_element(4, 4, C64::new(1.0, 0.0));
        let h = hafnian(&a).unwrap();
        assert_relative_eq!(h.re, 3.0, epsilon = 1e-10);
        assert_relative_eq!(h.im, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn matches_matching_enumeration_up_to_8() {
        let mut rng = crate::rng::stage_rng(5, "hafnian-test");
        for n in [2usize, 4, 6, 8] {
            let mut a = DMatrix::<C64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    a[(i, j)] = z;
                    a[(j, i)] = z;
                }
            }
            let fast = hafnian(&a).unwrap();
            let slow = oracle(&a);
            assert_relative_eq!(fast.re, slow.re, epsilon = 1e-9, max_relative = 1e-9);
            assert_relative_eq!(fast.im, slow.im, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn block_bipartite_reduces_to_permanent() {
        // haf([[0, M],[Mᵀ, 0]]) = per(M); check 3x3 all-ones: per = 3! = 6.
        let n = 3;
        let mut a = DMatrix::<C64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                a[(i, n + j)] = C64::new(1.0, 0.0);
                a[(n + j, i)] = C64::new(1.0, 0.0);
            }
        }
        let h = hafnian(&a).unwrap();
        assert_relative_eq!(h.re, 6.0, epsilon = 1e-9);
    }
}
