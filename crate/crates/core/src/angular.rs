//! Wigner 3-j and 6-j symbols and Clebsch-Gordan coefficients (Condon-Shortley phases),
//! evaluated with the Racah formulas. Angular momenta are passed as [`HalfInt`].

use std::fmt;

/// A half-integer stored as twice its value, so 3/2 is `HalfInt(3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(pub i32);

impl HalfInt {
    pub fn from_f64(x: f64) -> Self {
        HalfInt((2.0 * x).round() as i32)
    }
    pub fn int(n: i32) -> Self {
        HalfInt(2 * n)
    }
    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
    pub fn twice(self) -> i32 {
        self.0
    }
    /// Projections j, j-1, ..., -j.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let j = self.0;
        (0..=j).map(move |k| HalfInt(j - 2 * k))
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 + o.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 - o.0)
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

// factorial of n2/2; None when n2 is odd or negative
fn fact2(n2: i32) -> Option<f64> {
    if n2 < 0 || n2 % 2 != 0 {
        return None;
    }
    let n = n2 / 2;
    let mut acc = 1.0;
    for k in 2..=n {
        acc *= k as f64;
    }
    Some(acc)
}

fn sign(n2: i32) -> f64 {
    // (-1)^(n2/2), n2 even
    if (n2 / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn triangle(a: i32, b: i32, c: i32) -> Option<f64> {
    if (a + b + c) % 2 != 0 {
        return None;
    }
    let num = fact2(a + b - c)? * fact2(a - b + c)? * fact2(-a + b + c)?;
    Some(num / fact2(a + b + c + 2)?)
}

/// Wigner 3-j symbol (j1 j2 j3; m1 m2 m3).
pub fn wigner_3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> f64 {
    let (j1, j2, j3, m1, m2, m3) = (j1.0, j2.0, j3.0, m1.0, m2.0, m3.0);
    if m1 + m2 + m3 != 0 || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (j3 + m3) % 2 != 0 {
        return 0.0;
    }
    let Some(tri) = triangle(j1, j2, j3) else {
        return 0.0;
    };
    let pref = (tri
        * fact2(j1 + m1).unwrap()
        * fact2(j1 - m1).unwrap()
        * fact2(j2 + m2).unwrap()
        * fact2(j2 - m2).unwrap()
        * fact2(j3 + m3).unwrap()
        * fact2(j3 - m3).unwrap())
    .sqrt();
    let mut sum = 0.0;
    let mut k = 0;
    while k <= j1 + j2 + j3 {
        let denom = (|| {
            Some(
                fact2(k)?
                    * fact2(j3 - j2 + k + m1)?
                    * fact2(j3 - j1 + k - m2)?
                    * fact2(j1 + j2 - j3 - k)?
                    * fact2(j1 - k - m1)?
                    * fact2(j2 - k + m2)?,
            )
        })();
        if let Some(d) = denom {
            sum += sign(k) / d;
        }
        k += 2;
    }
    sign(j1 - j2 - m3) * pref * sum
}

/// Wigner 6-j symbol {j1 j2 j3; j4 j5 j6}.
pub fn wigner_6j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> f64 {
    let (a, b, c, d, e, f) = (j1.0, j2.0, j3.0, j4.0, j5.0, j6.0);
    let tris = [
        triangle(a, b, c),
        triangle(a, e, f),
        triangle(d, b, f),
        triangle(d, e, c),
    ];
    if tris.iter().any(|t| t.is_none()) {
        return 0.0;
    }
    let pref: f64 = tris.iter().map(|t| t.unwrap()).product::<f64>().sqrt();
    let lo = (a + b + c).max(a + e + f).max(d + b + f).max(d + e + c);
    let hi = (a + b + d + e).min(a + c + d + f).min(b + c + e + f);
    let mut sum = 0.0;
    let mut t = lo;
    while t <= hi {
        let denom = (|| {
            Some(
                fact2(t - a - b - c)?
                    * fact2(t - a - e - f)?
                    * fact2(t - d - b - f)?
                    * fact2(t - d - e - c)?
                    * fact2(a + b + d + e - t)?
                    * fact2(a + c + d + f - t)?
                    * fact2(b + c + e + f - t)?,
            )
        })();
        if let Some(den) = denom {
            sum += sign(t) * fact2(t + 2).unwrap() / den;
        }
        t += 2;
    }
    pref * sum
}

/// Clebsch-Gordan coefficient ⟨j1 m1 j2 m2 | J M⟩.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> f64 {
    if m1.0 + m2.0 != m.0 {
        return 0.0;
    }
    let phase = sign(j1.0 - j2.0 + m.0);
    phase * ((j.0 + 1) as f64).sqrt() * wigner_3j(j1, j2, j, m1, m2, -m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(x: f64) -> HalfInt {
        HalfInt::from_f64(x)
    }

    // reference values from sympy.physics.wigner
    #[test]
    fn three_j_table() {
        let cases = [
            ([1.0, 1.0, 1.0, 1.0, 0.0, -1.0], -0.408_248_290_463_863_02),
            ([0.5, 1.0, 0.5, -0.5, 1.0, -0.5], -0.577_350_269_189_625_76),
            ([2.0, 1.0, 1.0, 1.0, 0.0, -1.0], -0.316_227_766_016_837_93),
            ([1.5, 0.5, 2.0, 0.5, -0.5, 0.0], -0.316_227_766_016_837_93),
        ];
        for (a, want) in cases {
            let got = wigner_3j(h(a[0]), h(a[1]), h(a[2]), h(a[3]), h(a[4]), h(a[5]));
            assert!((got - want).abs() < 1e-14, "{a:?}: {got} vs {want}");
        }
    }

    #[test]
    fn six_j_table() {
        let cases = [
            ([0.5, 2.0, 1.5, 1.0, 0.5, 1.0], 0.288_675_134_594_812_88),
            ([0.5, 1.0, 1.5, 2.0, 0.5, 1.0], 0.288_675_134_594_812_88),
            ([1.0, 1.0, 1.0, 1.0, 1.0, 1.0], 1.0 / 6.0),
            ([2.0, 2.0, 2.0, 2.0, 2.0, 2.0], -0.042_857_142_857_142_857),
        ];
        for (a, want) in cases {
            let got = wigner_6j(h(a[0]), h(a[1]), h(a[2]), h(a[3]), h(a[4]), h(a[5]));
            assert!((got - want).abs() < 1e-14, "{a:?}: {got} vs {want}");
        }
    }

    #[test]
    fn clebsch_gordan_table() {
        let cg = |a: [f64; 6]| clebsch_gordan(h(a[0]), h(a[1]), h(a[2]), h(a[3]), h(a[4]), h(a[5]));
        assert!((cg([0.5, 0.5, 1.5, -0.5, 1.0, 0.0]) - 0.707_106_781_186_547_5).abs() < 1e-14);
        assert!((cg([0.5, -0.5, 1.5, 1.5, 1.0, 1.0]) + 0.866_025_403_784_438_6).abs() < 1e-14);
        assert!((cg([1.0, 1.0, 1.0, -1.0, 2.0, 0.0]) - 0.408_248_290_463_863_0).abs() < 1e-14);
    }

    #[test]
    fn selection_rules_vanish() {
        assert_eq!(
            wigner_3j(h(1.0), h(1.0), h(3.0), h(0.0), h(0.0), h(0.0)),
            0.0
        );
        assert_eq!(
            wigner_3j(h(1.0), h(1.0), h(1.0), h(1.0), h(1.0), h(-1.0)),
            0.0
        );
        assert_eq!(
            wigner_6j(h(0.5), h(0.5), h(3.0), h(1.0), h(1.0), h(1.0)),
            0.0
        );
    }

    #[test]
    fn cg_orthonormal_columns() {
        // coupling j1=1/2 with j2=3/2
        let (j1, j2) = (h(0.5), h(1.5));
        for jj in [h(1.0), h(2.0)] {
            for jk in [h(1.0), h(2.0)] {
                for m in jj.projections() {
                    let mut s = 0.0;
                    for m1 in j1.projections() {
                        let m2 = m - m1;
                        if m2.0.abs() > j2.0 {
                            continue;
                        }
                        s += clebsch_gordan(j1, m1, j2, m2, jj, m)
                            * clebsch_gordan(j1, m1, j2, m2, jk, m);
                    }
                    let want = if jj == jk && m.0.abs() <= jk.0 {
                        1.0
                    } else {
                        0.0
                    };
                    assert!((s - want).abs() < 1e-13);
                }
            }
        }
    }
}
