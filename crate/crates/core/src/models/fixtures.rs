//! Bundled models with default windows.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{CVector, ONE, ZERO};
use crate::models::{aklt_spec, mps_injectivity_length, ModelSpec, ProductSpec};
use crate::region::Region;
use crate::settings::Settings;

#[derive(Clone, Debug, Serialize)]
pub struct Fixture {
    pub name: String,
    pub description: String,
    pub spec: ModelSpec,
    /// Bounding box used when a config does not give one.
    pub bbox: Region,
    pub metadata: BTreeMap<String, Value>,
}

fn basis_state(d: usize, i: usize) -> ProductSpec {
    let psi = CVector::from_fn(d, |j, _| if j == i { ONE } else { ZERO });
    ProductSpec { site_dim: d, psi }
}

pub fn fixtures() -> Vec<Fixture> {
    let aklt = aklt_spec();
    let ell = mps_injectivity_length(&aklt, 8, &Settings::default());
    vec![
        Fixture {
            name: "aklt".into(),
            description: "spin-1 valence-bond chain, bond dimension 2, four edge states on open chains".into(),
            spec: ModelSpec::Mps(aklt),
            bbox: Region::interval(0, 6),
            metadata: BTreeMap::from([
                ("site_dim".into(), json!(3)),
                ("bond_dim".into(), json!(2)),
                ("injectivity_length".into(), json!(ell)),
                ("kernel_dim".into(), json!(4)),
            ]),
        },
        Fixture {
            name: "product".into(),
            description: "kernel spanned by |0…0⟩ on every window (qubits)".into(),
            spec: ModelSpec::Product(basis_state(2, 0)),
            bbox: Region::interval(0, 6),
            metadata: BTreeMap::from([("site_dim".into(), json!(2)), ("kernel_dim".into(), json!(1))]),
        },
        Fixture {
            name: "two-product-meet".into(),
            description: "windowwise meet of the |0…0⟩ and |1…1⟩ product systems; kernel span{|0…0⟩, |1…1⟩}".into(),
            spec: ModelSpec::Meet {
                left: Box::new(ModelSpec::Product(basis_state(2, 0))),
                right: Box::new(ModelSpec::Product(basis_state(2, 1))),
            },
            bbox: Region::interval(0, 6),
            metadata: BTreeMap::from([("site_dim".into(), json!(2)), ("kernel_dim".into(), json!(2))]),
        },
        Fixture {
            name: "frustrated-random".into(),
            description: "random rank-6 projector on two qutrits; local terms cannot be minimized together".into(),
            spec: ModelSpec::RandomInteraction { site_dim: 3, range: Region::interval(0, 2), rank: 6, seed: 7 },
            bbox: Region::interval(0, 3),
            metadata: BTreeMap::from([("site_dim".into(), json!(3)), ("seed".into(), json!(7))]),
        },
        Fixture {
            name: "vbs-chain".into(),
            description: "Gaussian valence-bond chain, qutrit sites, two values per bond index".into(),
            spec: ModelSpec::RandomVbs { lattice_dim: 1, site_dim: 3, index_size: 2, seed: 11 },
            bbox: Region::interval(0, 6),
            metadata: BTreeMap::from([("site_dim".into(), json!(3)), ("seed".into(), json!(11))]),
        },
        Fixture {
            name: "vbs-square".into(),
            description: "Gaussian valence-bond model on the square lattice, qubit sites, two values per bond index"
                .into(),
            spec: ModelSpec::RandomVbs { lattice_dim: 2, site_dim: 2, index_size: 2, seed: 13 },
            bbox: Region::rectangle(&[0, 0], &[3, 3]),
            metadata: BTreeMap::from([("site_dim".into(), json!(2)), ("seed".into(), json!(13))]),
        },
    ]
}

pub fn fixture(name: &str) -> Result<Fixture> {
    fixtures().into_iter().find(|f| f.name == name).ok_or_else(|| {
        let known: Vec<String> = fixtures().into_iter().map(|f| f.name).collect();
        Error::Invalid(format!("unknown fixture '{name}' (known: {})", known.join(", ")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_least_four_fixtures() {
        let names: Vec<String> = fixtures().into_iter().map(|f| f.name).collect();
        assert!(names.len() >= 4);
        for n in ["aklt", "product", "two-product-meet", "frustrated-random"] {
            assert!(names.iter().any(|x| x == n), "{n}");
        }
        assert!(fixture("nope").is_err());
    }

    #[test]
    fn aklt_reports_injectivity_length_two() {
        assert_eq!(fixture("aklt").unwrap().metadata["injectivity_length"], json!(2));
    }

    #[test]
    fn fixtures_round_trip_through_config_json() {
        let s = Settings::default();
        for f in fixtures() {
            let text = serde_json::to_string(&f.spec).unwrap();
            let back: ModelSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, f.spec, "{}", f.name);
            let small = match f.bbox.dim() {
                Some(1) => Region::interval(0, 3),
                _ => Region::rectangle(&[0, 0], &[2, 2]),
            };
            let a = f.spec.build(&small, &s).unwrap();
            let b = back.build(&small, &s).unwrap();
            assert_eq!(a.len(), b.len());
            for (p, q) in a.projectors().zip(b.projectors()) {
                assert!(p.distance(q).unwrap() < 1e-12, "{}", f.name);
            }
        }
    }
}
