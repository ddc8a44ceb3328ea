//! Brute-force reference computations.
//!
//! Everything here is a dense sum over group elements built only from
//! [`Group::char_pairing`] and plain convolution. None of it shares code with
//! the closed forms it is used to check. Cost is `O(p^{2m})`, so keep the
//! levels small.

use num_complex::Complex64;

use crate::padic::{unit_root, Group};

/// `(F f)(y) = sum_x p^{-m} chi(x y) f(x)` for every dual residue `y`.
pub fn dense_fourier(group: &Group, f: &[f64]) -> Vec<Complex64> {
    let q = group.modulus();
    let w = 1.0 / q as f64;
    (0..q).map(|y| (0..q).map(|x| unit_root(group.pairing_phase(x, y), q) * (f[x as usize] * w)).sum()).collect()
}

/// `(F^{-1} g)(x) = sum_y chi(-x y) g(y)` for every group residue `x`.
pub fn dense_inverse_fourier(group: &Group, g: &[f64]) -> Vec<Complex64> {
    let q = group.modulus();
    (0..q).map(|x| (0..q).map(|y| unit_root(q - group.pairing_phase(x, y), q) * g[y as usize]).sum()).collect()
}

/// `int_{B_m(i)} chi(x y) d[x]` by summing over the ball's members.
pub fn brute_indicator_integral(group: &Group, i: u32, y: u64) -> Complex64 {
    let q = group.modulus();
    let step = if i == 0 { q } else { group.p().pow(group.m() - i) };
    let members = (0..q).step_by(step as usize);
    members.map(|x| unit_root(group.pairing_phase(x, y), q)).sum::<Complex64>() / q as f64
}

/// `sum_{|[[y]]| <= p^i} chi(x y)` by summing over the dual ball's members.
pub fn brute_dual_indicator_integral(group: &Group, i: u32, x: u64) -> Complex64 {
    let q = group.modulus();
    let step = group.p().pow(group.m() - i);
    (0..q).step_by(step as usize).map(|y| unit_root(group.pairing_phase(x, y), q)).sum()
}

/// Cyclic convolution of two mass functions on `Z / p^m`.
pub fn dense_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let q = a.len();
    let mut out = vec![0.0; q];
    for (x, &ax) in a.iter().enumerate() {
        if ax == 0.0 {
            continue;
        }
        for (y, &by) in b.iter().enumerate() {
            out[(x + y) % q] += ax * by;
        }
    }
    out
}

/// `n`-fold convolution power of a mass function; `n = 0` is the point mass at `0`.
pub fn dense_convolution_power(pmf: &[f64], n: u64) -> Vec<f64> {
    let mut acc = vec![0.0; pmf.len()];
    acc[0] = 1.0;
    for _ in 0..n {
        acc = dense_convolution(&acc, pmf);
    }
    acc
}

/// `sum_y pmf(y) chi(x y)`: characteristic function of a mass function on `G_m`.
pub fn dense_characteristic(group: &Group, pmf: &[f64], y: u64) -> Complex64 {
    let q = group.modulus();
    (0..q).map(|x| unit_root(group.pairing_phase(x, y), q) * pmf[x as usize]).sum()
}

/// Probability that `Y_t` lies in `p^j Z_p` under a characteristic function
/// given on dual classes by norm exponent, summed densely over the dual of
/// `G_level` (`level >= j`).
///
/// Each dual element contributes `phi(y) * int_{p^j Z_p} chi(x y) dx`, with the
/// ball integral itself summed over the `p^{level-j}` members of the ball.
pub fn dense_ball_mass(p: u64, level: u32, j: u32, phi: impl Fn(u32) -> f64) -> f64 {
    let group = Group::new(p, level).expect("oracle level must be representable");
    let q = group.modulus();
    let step = p.pow(j);
    let mut total = Complex64::new(0.0, 0.0);
    for y in 0..q {
        let k = match group.class_of(y) {
            v if v == level => 0,
            v => level - v,
        };
        let ball: Complex64 = (0..q).step_by(step as usize).map(|x| unit_root(group.pairing_phase(x, y), q)).sum();
        total += ball / q as f64 * phi(k);
    }
    total.re
}

/// Density of `Y_t` at `x = p^j`, truncated to dual elements of norm at most
/// `p^level`.
pub fn dense_radial_density(p: u64, level: u32, j: u32, phi: impl Fn(u32) -> f64) -> f64 {
    let group = Group::new(p, level).expect("oracle level must be representable");
    let q = group.modulus();
    let x = p.pow(j) % q;
    (0..q)
        .map(|y| {
            let k = match group.class_of(y) {
                v if v == level => 0,
                v => level - v,
            };
            unit_root(group.pairing_phase(x, y), q) * phi(k)
        })
        .sum::<Complex64>()
        .re
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use num_traits::ToPrimitive;

    #[test]
    fn indicator_integrals_match_brute_force() {
        for (p, m) in [(2u64, 3u32), (3, 2), (5, 2)] {
            let g = Group::new(p, m).unwrap();
            for y in g.dual_elements() {
                for i in 0..=m {
                    let exact = g.indicator_integral(i, &y).unwrap().to_f64().unwrap();
                    let brute = brute_indicator_integral(&g, i, y.residue());
                    assert!((brute.re - exact).abs() < 1e-12 && brute.im.abs() < 1e-12);
                }
            }
            for x in g.elements() {
                for i in 0..=m {
                    let exact = g.dual_indicator_integral(i, &x).unwrap().to_f64().unwrap();
                    let brute = brute_dual_indicator_integral(&g, i, x.residue());
                    assert!((brute.re - exact).abs() < 1e-9 && brute.im.abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn small_indicator_example() {
        let g = Group::new(2, 2).unwrap();
        let brute = brute_indicator_integral(&g, 1, 2);
        assert!((brute.re - 0.5).abs() < 1e-15);
        assert_eq!(g.indicator_integral(1, &g.dual_element(2).unwrap()).unwrap(), Ratio::new(1, 2));
    }

    #[test]
    fn dense_transforms_are_inverse() {
        let g = Group::new(3, 2).unwrap();
        let f: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        // f is not radial, so the transform is complex.
        let full = dense_fourier(&g, &f);
        let q = g.modulus();
        for x in 0..q {
            let back: Complex64 = (0..q).map(|y| unit_root(q - g.pairing_phase(x, y), q) * full[y as usize]).sum();
            assert!((back.re - f[x as usize]).abs() < 1e-12 && back.im.abs() < 1e-12);
        }
        let inv = dense_inverse_fourier(&g, &[1.0; 9]);
        assert!((inv[0].re - 9.0).abs() < 1e-12 && inv[1].norm() < 1e-12);
    }

    #[test]
    fn convolution_power_is_a_pmf() {
        let pmf = vec![0.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
        let two = dense_convolution_power(&pmf, 2);
        assert!((two[0] - 0.5).abs() < 1e-15);
        assert!((two[2] - 1.0 / 18.0).abs() < 1e-15);
        assert!((two.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(dense_convolution_power(&pmf, 0), vec![1.0, 0.0, 0.0, 0.0]);
    }
}
