use serde::{Deserialize, Serialize};

use super::material::MaterialParams;
use crate::{Error, Result};

/// Which part of the elastic energy drives damage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergySplit {
    Isotropic,
    /// Amor et al. volumetric-deviatoric split with the n = 2 bulk modulus.
    VolumetricDeviatoric,
    /// Miehe et al. spectral split of the in-plane strain.
    Spectral,
}

impl EnergySplit {
    pub fn name(self) -> &'static str {
        match self {
            Self::Isotropic => "isotropic",
            Self::VolumetricDeviatoric => "volumetric-deviatoric",
            Self::Spectral => "spectral",
        }
    }
}

impl std::str::FromStr for EnergySplit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "isotropic" => Ok(Self::Isotropic),
            "volumetric-deviatoric" | "vol-dev" | "amor" => Ok(Self::VolumetricDeviatoric),
            "spectral" | "miehe" => Ok(Self::Spectral),
            other => Err(format!("unknown energy split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitResult {
    pub psi_plus: f64,
    pub psi_minus: f64,
    pub psi: f64,
    /// Undamaged stress `C0 : eps`, used in equilibrium for every split.
    pub stress: [f64; 3],
}

#[inline]
fn pos(a: f64) -> f64 {
    a.max(0.0)
}

#[inline]
fn neg(a: f64) -> f64 {
    a.min(0.0)
}

/// In-plane principal strains (descending).
pub fn principal_strains(eps: &[f64; 3]) -> [f64; 2] {
    let mean = 0.5 * (eps[0] + eps[1]);
    let half_diff = 0.5 * (eps[0] - eps[1]);
    let exy = 0.5 * eps[2];
    let r = half_diff.hypot(exy);
    [mean + r, mean - r]
}

pub fn split_energy(eps: &[f64; 3], params: &MaterialParams, split: EnergySplit) -> SplitResult {
    let lambda = params.lambda();
    let mu = params.mu();
    let tr = eps[0] + eps[1];
    let eps_eps = eps[0] * eps[0] + eps[1] * eps[1] + 0.5 * eps[2] * eps[2];
    let psi = 0.5 * lambda * tr * tr + mu * eps_eps;
    let stress = params.stress(eps);
    let (psi_plus, psi_minus) = match split {
        EnergySplit::Isotropic => (psi, 0.0),
        EnergySplit::VolumetricDeviatoric => {
            let k = lambda + mu;
            let d0 = eps[0] - 0.5 * tr;
            let d1 = eps[1] - 0.5 * tr;
            let dev = d0 * d0 + d1 * d1 + 0.5 * eps[2] * eps[2];
            (
                0.5 * k * pos(tr).powi(2) + mu * dev,
                0.5 * k * neg(tr).powi(2),
            )
        }
        EnergySplit::Spectral => {
            let [e1, e2] = principal_strains(eps);
            (
                0.5 * lambda * pos(tr).powi(2) + mu * (pos(e1).powi(2) + pos(e2).powi(2)),
                0.5 * lambda * neg(tr).powi(2) + mu * (neg(e1).powi(2) + neg(e2).powi(2)),
            )
        }
    };
    SplitResult {
        psi_plus,
        psi_minus,
        psi,
        stress,
    }
}

/// `H = max(H_prev, psi_plus)`: the running maximum that keeps the crack
/// driving force from decreasing on unloading.
pub fn update_history(h_prev: f64, psi_plus: f64) -> Result<f64> {
    if h_prev < 0.0 || psi_plus < 0.0 || h_prev.is_nan() || psi_plus.is_nan() {
        return Err(Error::NegativeHistory { h_prev, psi_plus });
    }
    Ok(h_prev.max(psi_plus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn steel() -> MaterialParams {
        MaterialParams::new(210_000.0, 0.3, 2.7, 0.024).unwrap()
    }

    const SPLITS: [EnergySplit; 3] = [
        EnergySplit::Isotropic,
        EnergySplit::VolumetricDeviatoric,
        EnergySplit::Spectral,
    ];

    #[test]
    fn zero_strain_gives_zero() {
        for s in SPLITS {
            let r = split_energy(&[0.0; 3], &steel(), s);
            assert_eq!((r.psi_plus, r.psi_minus, r.psi), (0.0, 0.0, 0.0));
            assert_eq!(r.stress, [0.0; 3]);
        }
    }

    #[test]
    fn hydrostatic_compression_volumetric_deviatoric() {
        let p = steel();
        let a = 1e-3;
        let r = split_energy(&[-a, -a, 0.0], &p, EnergySplit::VolumetricDeviatoric);
        assert_eq!(r.psi_plus, 0.0);
        let expect = 0.5 * p.bulk_2d() * (2.0 * a).powi(2);
        assert!((r.psi_minus - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn uniaxial_strain_matches_quadratic_form() {
        let p = steel();
        let eps = [1e-3, 0.0, 0.0];
        // brute-force 0.5 eps^T C eps
        let c = p.elasticity();
        let mut q = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                q += 0.5 * eps[i] * c[i][j] * eps[j];
            }
        }
        for s in SPLITS {
            let r = split_energy(&eps, &p, s);
            assert!(((r.psi_plus + r.psi_minus) - q).abs() <= 1e-12 * q, "{s:?}");
            assert!((r.psi - q).abs() <= 1e-12 * q);
        }
    }

    #[test]
    fn history_examples() {
        assert_eq!(update_history(5.0, 3.0).unwrap(), 5.0);
        assert_eq!(update_history(0.0, 7.0).unwrap(), 7.0);
        assert!(update_history(-1.0, 2.0).is_err());
        assert!(update_history(1.0, -2.0).is_err());
        // load, unload, reload to the same strain
        let p = steel();
        let peak = split_energy(&[2e-3, 0.0, 1e-3], &p, EnergySplit::Spectral).psi_plus;
        let mut h = update_history(0.0, peak).unwrap();
        h = update_history(h, 0.0).unwrap();
        h = update_history(h, peak).unwrap();
        assert_eq!(h, peak);
    }

    #[test]
    fn principal_strains_of_pure_shear() {
        let [e1, e2] = principal_strains(&[0.0, 0.0, 2e-3]);
        assert!((e1 - 1e-3).abs() < 1e-18 && (e2 + 1e-3).abs() < 1e-18);
    }

    proptest! {
        #[test]
        fn split_parts_sum_to_total(
            exx in -1e-2f64..1e-2, eyy in -1e-2f64..1e-2, gxy in -1e-2f64..1e-2,
            nu in 0.0f64..0.49,
        ) {
            let p = MaterialParams::new(1000.0, nu, 1.0, 0.1).unwrap();
            let eps = [exx, eyy, gxy];
            for s in SPLITS {
                let r = split_energy(&eps, &p, s);
                prop_assert!(r.psi_plus >= 0.0 && r.psi_minus >= 0.0);
                let scale = r.psi.abs().max(1e-300);
                prop_assert!(((r.psi_plus + r.psi_minus) - r.psi).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn tensile_states_are_fully_active(
            e1 in 0.0f64..1e-2, e2 in 0.0f64..1e-2, theta in 0.0f64..3.2,
        ) {
            let (c, s) = (theta.cos(), theta.sin());
            let exx = e1 * c * c + e2 * s * s;
            let eyy = e1 * s * s + e2 * c * c;
            let gxy = 2.0 * (e1 - e2) * c * s;
            let p = steel();
            let r = split_energy(&[exx, eyy, gxy], &p, EnergySplit::Spectral);
            prop_assert!((r.psi_plus - r.psi).abs() <= 1e-10 * r.psi.max(1e-300));
            let v = split_energy(&[e1, e1, 0.0], &p, EnergySplit::VolumetricDeviatoric);
            prop_assert!((v.psi_plus - v.psi).abs() <= 1e-10 * v.psi.max(1e-300));
        }

        #[test]
        fn history_is_monotone(seq in proptest::collection::vec(0.0f64..10.0, 1..40)) {
            let mut h = 0.0;
            for psi in seq {
                let next = update_history(h, psi).unwrap();
                prop_assert!(next >= h);
                h = next;
            }
        }
    }
}
