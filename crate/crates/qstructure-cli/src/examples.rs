//! Named example inputs, materialized as channel or OQRW JSON.

use qstructure::channel::ChannelSpec;
use qstructure::format;
use qstructure::linalg;
use qstructure::numerics::Tolerances;
use qstructure::oqrw;
use qstructure::random;

use crate::Failure;

pub const NAMES: &[&str] =
    &["pauli", "clocked-pauli", "cyclic-shift", "nn-cycle", "random-oqrw", "identity", "unitary-mixture"];

/// Numeric knobs of the example builders; unset fields take per-example defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExampleParams {
    pub d: Option<usize>,
    pub alpha: Option<f64>,
    pub n: Option<usize>,
    pub h: Option<usize>,
    pub clock: Option<usize>,
    pub k: Option<usize>,
    pub preset: Option<String>,
    pub seed: u64,
}

fn bad(msg: String) -> Failure {
    Failure::Input(msg)
}

fn lift(e: qstructure::Error) -> Failure {
    crate::input_failure(&e)
}

/// JSON text of the named example.
pub fn build(name: &str, p: &ExampleParams, tol: &Tolerances) -> Result<String, Failure> {
    let value = match name {
        "pauli" => {
            let w = oqrw::pauli_walk(p.d.unwrap_or(3), p.alpha.unwrap_or(0.5), tol).map_err(lift)?;
            serde_json::to_value(format::oqrw_to_file(&w))
        }
        "clocked-pauli" => {
            let w = oqrw::clocked_pauli_walk(p.d.unwrap_or(3), p.alpha.unwrap_or(0.5), p.clock.unwrap_or(2), tol)
                .map_err(lift)?;
            serde_json::to_value(format::oqrw_to_file(&w))
        }
        "cyclic-shift" => {
            let d = p.d.unwrap_or(3);
            let h = p.h.unwrap_or(2);
            if d < 2 || h < 1 {
                return Err(bad(format!("cyclic-shift needs d >= 2 and h >= 1, got d={d} h={h}")));
            }
            let w = oqrw::cyclic_shift(&oqrw::random_unitaries(d, h, p.seed), tol)
                .map_err(lift)?
                .with_label(format!("cyclic shift d={d} h={h} seed={}", p.seed));
            serde_json::to_value(format::oqrw_to_file(&w))
        }
        "nn-cycle" => {
            let n = p.n.unwrap_or(8);
            let (l_plus, l_minus) = match p.preset.as_deref().unwrap_or("special-basis") {
                "special-basis" => oqrw::special_basis_preset(),
                "generic" => oqrw::generic_unitary_preset(p.seed),
                other => return Err(bad(format!("unknown nn-cycle preset {other:?} (special-basis, generic)"))),
            };
            let w = oqrw::nn_cycle(n, &l_plus, &l_minus, tol).map_err(lift)?;
            serde_json::to_value(format::oqrw_to_file(&w))
        }
        "random-oqrw" => {
            let n = p.n.unwrap_or(4);
            let h = p.h.unwrap_or(2);
            if n < 1 || h < 1 {
                return Err(bad("random-oqrw needs n >= 1 and h >= 1".into()));
            }
            let w = oqrw::random_oqrw(n, h, p.seed, tol).map_err(lift)?;
            serde_json::to_value(format::oqrw_to_file(&w))
        }
        "identity" => {
            let d = p.d.unwrap_or(3);
            if d < 1 {
                return Err(bad("identity needs d >= 1".into()));
            }
            let c = ChannelSpec::from_kraus(vec![linalg::identity(d)], tol)
                .map_err(lift)?
                .with_label(format!("identity d={d}"));
            serde_json::to_value(format::channel_to_file(&c))
        }
        "unitary-mixture" => {
            let d = p.d.unwrap_or(3);
            let k = p.k.unwrap_or(3);
            if d < 1 || k < 1 {
                return Err(bad("unitary-mixture needs d >= 1 and k >= 1".into()));
            }
            let mut rng = random::rng(p.seed);
            let c = random::unitary_mixture(d, k, &mut rng)
                .with_label(format!("unitary mixture d={d} k={k} seed={}", p.seed));
            serde_json::to_value(format::channel_to_file(&c))
        }
        other => return Err(bad(format!("unknown example {other:?}; known: {}", NAMES.join(", ")))),
    };
    let value = value.map_err(|e| Failure::Input(e.to_string()))?;
    serde_json::to_string_pretty(&value).map_err(|e| Failure::Input(e.to_string()))
}
