//! The analysis pipeline and the report it produces.

use serde::{Deserialize, Serialize};

use qstructure::algebra::{self, OperatorAlgebra};
use qstructure::channel::ChannelSpec;
use qstructure::checks;
use qstructure::cycles::{self, MfncComponent};
use qstructure::format::{self, ChannelFile, Input, JsonMatrix};
use qstructure::numerics::{self, MatrixSubspace, Tolerances};
use qstructure::oqrw::{self, OqrwSpec};
use qstructure::structure::{self, InvariantStateReport, L2Structure};
use qstructure::{C64, CMat, Error, linalg};

use crate::{Failure, Options, REPORT_SCHEMA_VERSION};

/// How much checking accompanies the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Residuals that fall out of the pipeline itself.
    Core,
    /// Core plus the sampled property suites of every module.
    Full,
}

/// One line of the verification ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub module: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    /// `"channel"` or `"oqrw"`.
    pub kind: String,
    pub label: String,
    pub dim: usize,
    pub kraus_count: usize,
    pub vertices: Option<Vec<String>>,
    pub local_dims: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub tolerances: Tolerances,
    pub seed: u64,
    pub max_power: usize,
    pub cesaro_steps: usize,
    pub gap_horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dims {
    pub fixed_points: usize,
    pub multiplicative_domain: usize,
    pub dfa: usize,
    pub dfa_center: Option<usize>,
    pub stable: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub value: [f64; 2],
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfaSummary {
    /// `"intersection-chain"` or `"word-commutant"`.
    pub method: String,
    pub chain_dims: Option<Vec<usize>>,
    pub stabilization_index: Option<usize>,
    pub word_dims: Option<Vec<usize>>,
    pub word_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedBlock {
    pub left_dim: usize,
    pub right_dim: usize,
    /// The state `ρ_j` on the right factor.
    pub state: JsonMatrix,
}

/// Invariant states are `⊕_j λ_j U_j*(ω_j ⊗ ρ_j)U_j`; `parameters` counts the
/// real degrees of freedom in `(λ, ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantStates {
    pub blocks: Vec<FixedBlock>,
    pub parameters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub left_dim: usize,
    pub right_dims: Vec<usize>,
    pub isomorphism_residual: f64,
    pub reconstruction_defect: f64,
    pub state_defect: f64,
    pub round_trips_ergodic: bool,
    pub xi_kraus_counts: Vec<usize>,
    pub structured_kraus_count: usize,
    pub structured_kraus_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedSummary {
    /// Eigenvalues of `T̃_0`, one per block of `F` inside the component.
    pub eigenvalues: Vec<[f64; 2]>,
    pub eigenspace_dims: Vec<usize>,
    pub f_distance: f64,
    pub center_defect: f64,
    pub psi_residual: f64,
    pub psi_block_defect: f64,
    pub psi_dfa_distance: Vec<f64>,
    pub psi_periods: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub rank: usize,
    pub period: usize,
    pub omega: [f64; 2],
    pub cyclic_projection_ranks: Vec<usize>,
    /// `Q_0, …, Q_{d−1}` in global coordinates, with `Φ(Q_m) = Q_{m−1}`.
    pub cyclic_projections: Vec<JsonMatrix>,
    pub numbering_defect: f64,
    pub blocks: BlockSummary,
    pub fixed: FixedSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub m: usize,
    pub fixed_dim: usize,
    pub gcd: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    pub period: usize,
    pub rows: Vec<PowerRow>,
    pub fd_distance: f64,
    pub d_minimal: bool,
    pub restrictions_ergodic: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    #[serde(with = "rate")]
    pub eps_finite: f64,
    #[serde(with = "rate")]
    pub eps_asymptotic: f64,
    pub max_nonperipheral: f64,
    pub horizon: usize,
    pub no_uniform_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OqrwSummary {
    pub multiplicative_domain_dim: usize,
    pub dfa_dim: usize,
    pub diagonal_dim: usize,
    pub off_diagonal_dim: usize,
    pub dead_vertices: Vec<usize>,
    pub diagonal_forced: bool,
    pub path_rounds: usize,
    pub homogeneous: bool,
    pub cyclic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub input: InputSummary,
    pub settings: Settings,
    pub faithful: bool,
    pub min_invariant_eigenvalue: f64,
    pub dims: Dims,
    pub fixed_points_abelian: Option<bool>,
    pub peripheral_eigenvalues: Vec<[f64; 2]>,
    pub peripheral_clusters: Option<Vec<Cluster>>,
    pub dfa: DfaSummary,
    pub invariant_states: Option<InvariantStates>,
    pub components: Option<Vec<ComponentSummary>>,
    pub power_table: Option<PowerSummary>,
    pub gap: Option<GapSummary>,
    pub oqrw: Option<OqrwSummary>,
    /// Quantities the pipeline could not determine, by field name.
    pub undetermined: Vec<String>,
    pub checks: Vec<Check>,
}

impl AnalysisReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Period of the single component, when there is exactly one.
    pub fn period(&self) -> Option<usize> {
        match self.components.as_deref() {
            Some([only]) => Some(only.period),
            _ => None,
        }
    }
}

/// `+∞` rates are written as the string `"inf"`, since JSON has no infinity.
mod rate {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() && *x > 0.0 { s.serialize_str("inf") } else { s.serialize_f64(*x) }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("invalid rate {t:?}"))),
        }
    }
}

struct Ledger {
    checks: Vec<Check>,
}

impl Ledger {
    fn push(&mut self, name: &str, module: &str, residual: f64, tolerance: f64) {
        let pass = residual.is_finite() && residual <= tolerance;
        self.checks.push(Check { name: name.into(), module: module.into(), residual, tolerance, pass });
    }

    /// Boolean property recorded as a violation count against tolerance 0.
    fn flag(&mut self, name: &str, module: &str, ok: bool) {
        self.push(name, module, if ok { 0.0 } else { 1.0 }, 0.0);
    }
}

fn pair(z: C64) -> [f64; 2] {
    format::complex_to_json(z)
}

fn rank(p: &CMat) -> usize {
    linalg::trace(p).re.round() as usize
}

fn numerical(e: Error) -> Failure {
    Failure::Numerical(e)
}

fn summarize_input(input: &Input) -> InputSummary {
    match input {
        Input::Channel(c) => InputSummary {
            kind: "channel".into(),
            label: c.label.clone(),
            dim: c.dim,
            kraus_count: c.kraus.len(),
            vertices: None,
            local_dims: None,
        },
        Input::Oqrw(w) => InputSummary {
            kind: "oqrw".into(),
            label: w.label.clone(),
            dim: w.dim(),
            kraus_count: w.transitions.len(),
            vertices: Some(w.vertices.clone()),
            local_dims: Some(w.local_dims.clone()),
        },
    }
}

/// Channel file whose Kraus operators are taken as given; used by `verify`
/// so that a non-unital list produces a failing ledger instead of a parse error.
pub fn load_lenient(text: &str, tol: &Tolerances) -> Result<Input, Failure> {
    let strict = crate::load_text(text, tol);
    let Err(Failure::Input(_)) = &strict else { return strict };
    let value: serde_json::Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(_) => return strict,
    };
    if value.get("kraus").is_none() {
        return strict;
    }
    let Ok(file) = serde_json::from_value::<ChannelFile>(value) else { return strict };
    let kraus: Vec<CMat> = match file.kraus.iter().map(format::mat_from_json).collect() {
        Ok(k) => k,
        Err(_) => return strict,
    };
    if kraus.iter().any(|k| k.nrows() != file.dim || k.ncols() != file.dim) {
        return strict;
    }
    match ChannelSpec::from_kraus_unchecked(kraus, &file.label) {
        Ok(c) => Ok(Input::Channel(c)),
        Err(_) => strict,
    }
}

/// Runs the pipeline on a parsed input.
///
/// With a faithful invariant state the full structure is computed; otherwise
/// only the word-commutant decoherence-free algebra is, and every quantity that
/// depends on faithfulness is listed in `undetermined`.
pub fn analyze(input: &Input, opts: &Options, suite: Suite) -> Result<AnalysisReport, Failure> {
    let tol = &opts.tol;
    tol.validate().map_err(|e| Failure::Input(e.to_string()))?;
    let c = match input {
        Input::Channel(c) => c.clone(),
        Input::Oqrw(w) => w.to_channel(),
    };
    let mut ledger = Ledger { checks: Vec::new() };
    let eq = tol.eq_tol;
    let seed = opts.seed;

    let unitality = checks::unitality_defect(&c);
    ledger.push("Kraus operators are unital", "channel", unitality, eq);
    let settings = Settings {
        tolerances: *tol,
        seed,
        max_power: opts.max_power,
        cesaro_steps: opts.cesaro_steps,
        gap_horizon: opts.gap_horizon,
    };
    if unitality > eq {
        return Ok(AnalysisReport {
            schema_version: REPORT_SCHEMA_VERSION,
            input: summarize_input(input),
            settings,
            faithful: false,
            min_invariant_eigenvalue: 0.0,
            dims: Dims { fixed_points: 0, multiplicative_domain: 0, dfa: 0, dfa_center: None, stable: None },
            fixed_points_abelian: None,
            peripheral_eigenvalues: Vec::new(),
            peripheral_clusters: None,
            dfa: DfaSummary {
                method: "none".into(),
                chain_dims: None,
                stabilization_index: None,
                word_dims: None,
                word_distance: None,
            },
            invariant_states: None,
            components: None,
            power_table: None,
            gap: None,
            oqrw: None,
            undetermined: vec!["everything: the channel is not unital".into()],
            checks: ledger.checks,
        });
    }

    let t = c.transfer().mat;
    ledger.push("Choi matrix is positive semidefinite", "channel", checks::cp_defect(&t, c.dim), eq);
    ledger.push("transfer matrix agrees with the Kraus sum", "channel", checks::transfer_consistency(&c), eq);

    let fixed = structure::fixed_points(&c, tol);
    let m = structure::multiplicative_domain(&c, tol);
    let inv = structure::invariant_states(&c, tol).map_err(numerical)?;
    let rho_residual = linalg::trace_norm_hermitian(&(c.transfer().apply_pre(&inv.rho_max) - &inv.rho_max));
    ledger.push("rho_max is invariant", "structure", rho_residual, 10.0 * eq);
    let fixed_residual = fixed
        .space
        .basis
        .iter()
        .map(|b| linalg::frob(&(c.transfer().apply(b) - b)))
        .fold(0.0, f64::max);
    ledger.push("fixed-point basis is fixed", "structure", fixed_residual, 10.0 * eq);

    let mut report = if inv.faithful {
        faithful_pipeline(&c, &fixed, &m, &inv, opts, &mut ledger)?
    } else {
        degenerate_pipeline(&c, &fixed, &m, &inv, opts, &mut ledger)?
    };
    report.input = summarize_input(input);
    report.settings = settings;

    if let Input::Oqrw(w) = input {
        report.oqrw = Some(oqrw_checks(w, &c, &m, inv.faithful, opts, &mut ledger)?);
    }
    if suite == Suite::Full {
        full_suite(&c, &fixed, &m, &inv, input, opts, &mut ledger)?;
    }
    report.checks = ledger.checks;
    Ok(report)
}

fn spectrum_peripheral(t: &CMat, tol: &Tolerances) -> Vec<[f64; 2]> {
    let mut vals: Vec<C64> =
        linalg::eigenvalues(t).into_iter().filter(|z| z.norm() > 1.0 - tol.peripheral_band).collect();
    vals.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap_or(std::cmp::Ordering::Equal));
    vals.into_iter().map(pair).collect()
}

fn degenerate_pipeline(
    c: &ChannelSpec,
    fixed: &structure::FixedPoints,
    m: &OperatorAlgebra,
    inv: &InvariantStateReport,
    opts: &Options,
    ledger: &mut Ledger,
) -> Result<AnalysisReport, Failure> {
    let tol = &opts.tol;
    let (n, word_dims) = structure::dfa_word_commutant(c, tol).map_err(numerical)?;
    let n_mult = checks::multiplicativity_defect(c, &n, 4, opts.seed);
    ledger.push("dfa is inside the multiplicative domain", "structure", n_mult, 10.0 * tol.eq_tol);
    Ok(AnalysisReport {
        schema_version: REPORT_SCHEMA_VERSION,
        input: summarize_input(&Input::Channel(c.clone())),
        settings: Settings {
            tolerances: *tol,
            seed: opts.seed,
            max_power: opts.max_power,
            cesaro_steps: opts.cesaro_steps,
            gap_horizon: opts.gap_horizon,
        },
        faithful: false,
        min_invariant_eigenvalue: inv.min_eigenvalue,
        dims: Dims {
            fixed_points: fixed.dim(),
            multiplicative_domain: m.dim(),
            dfa: n.dim(),
            dfa_center: None,
            stable: None,
        },
        fixed_points_abelian: None,
        peripheral_eigenvalues: spectrum_peripheral(&c.transfer().mat, tol),
        peripheral_clusters: None,
        dfa: DfaSummary {
            method: "word-commutant".into(),
            chain_dims: None,
            stabilization_index: None,
            word_dims: Some(word_dims),
            word_distance: None,
        },
        invariant_states: None,
        components: None,
        power_table: None,
        gap: None,
        oqrw: None,
        undetermined: ["dims.dfa_center", "dims.stable", "peripheral_clusters", "invariant_states", "components", "power_table", "gap"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        checks: Vec::new(),
    })
}

fn faithful_pipeline(
    c: &ChannelSpec,
    fixed: &structure::FixedPoints,
    m: &OperatorAlgebra,
    inv: &InvariantStateReport,
    opts: &Options,
    ledger: &mut Ledger,
) -> Result<AnalysisReport, Failure> {
    let tol = &opts.tol;
    let eq = tol.eq_tol;
    let seed = opts.seed;
    let t = c.transfer().mat;

    let f = fixed.algebra(tol).ok_or(Failure::Numerical(Error::NotAlgebra { defect: fixed.closure_defect }))?;
    let p = structure::peripheral_subalgebra(c, inv, tol).map_err(numerical)?;
    let dfa = structure::dfa(c, tol).map_err(numerical)?;
    let n = OperatorAlgebra::from_subspace(p.m_r.clone(), tol).map_err(numerical)?;
    let n_center = algebra::center(&n, tol);
    let stable = structure::stable_subspace(&p, tol);

    let dfa_vs_mr = numerics::subspace_distance(&dfa.algebra.space, &p.m_r).map_err(numerical)?;
    ledger.push("dfa equals the peripheral span", "structure", dfa_vs_mr, 10.0 * eq);
    if let Some(w) = dfa.word_distance {
        ledger.push("intersection chain equals word commutant", "structure", w, 10.0 * eq);
    }

    let cesaro = structure::cesaro_expectation(c, opts.cesaro_steps, seed, tol).map_err(numerical)?;
    ledger.push("windowed ergodic average converges to E_F", "structure", cesaro.windowed_discrepancy, 100.0 * eq);
    let e_f = cesaro.expectation.as_ref().ok_or(Failure::Numerical(Error::NotAlgebra { defect: fixed.closure_defect }))?;
    let ef = checks::expectation_defects(&e_f.transfer, &t, &f, 4, seed);
    ledger.push("E_F is a conditional expectation commuting with the channel", "structure", ef.worst(), 10.0 * eq);
    let rho_pres = linalg::trace_norm_hermitian(&(e_f.apply_pre(&inv.rho_max) - &inv.rho_max));
    ledger.push("E_F preserves rho_max", "structure", rho_pres, 10.0 * eq);

    let e_n = structure::e_n_expectation(&p, seed, tol).map_err(numerical)?;
    let en = checks::expectation_defects(&e_n.transfer, &t, &n, 4, seed);
    ledger.push("E_N is a conditional expectation commuting with the channel", "structure", en.worst(), 10.0 * eq);
    let auto = checks::automorphism_defects(c, &n, 4, seed);
    ledger.push("channel maps N into N", "structure", auto.leakage, 10.0 * eq);
    ledger.push("channel is injective on N", "structure", auto.injectivity, 10.0 * eq);
    ledger.push("channel is multiplicative on N", "structure", auto.multiplicativity, 10.0 * eq);

    let l2 = L2Structure::new(&inv.rho_max, tol).map_err(numerical)?;
    let l2d = checks::l2_defects(c, &l2, &e_n.transfer, &n, 8, seed);
    ledger.push("channel is an L2(rho) contraction", "structure", l2d.contraction.max(l2d.operator_norm_excess), eq);
    ledger.push("channel is an L2(rho) isometry on N", "structure", l2d.isometry, eq);
    ledger.push("E_N ranges are rho-orthogonal", "structure", l2d.orthogonality.max(l2d.orthogonality_after), eq);

    let gap = structure::decoherence_gap(c, &p, &l2, opts.gap_horizon, tol).map_err(numerical)?;
    ledger.push("asymptotic rate matches the spectrum", "structure", checks::gap_consistency(c, gap.eps_asymptotic, tol), eq);

    let family = algebra::expectation_invariant_states(e_f);
    let blocks: Vec<FixedBlock> = (0..family.structure.blocks())
        .map(|j| FixedBlock {
            left_dim: family.structure.left_dims[j],
            right_dim: family.structure.right_dims[j],
            state: format::mat_to_json(&family.block_states[j]),
        })
        .collect();
    let parameters = blocks.iter().map(|b| b.left_dim * b.left_dim - 1).sum::<usize>() + blocks.len() - 1;
    let sample = family.central_sample();
    let sample_residual = linalg::trace_norm_hermitian(&(c.transfer().apply_pre(&sample) - &sample));
    ledger.push("parametrized invariant state is invariant", "algebra", sample_residual, 10.0 * eq);

    let dec = cycles::mfnc_decompose(c, &f, &n, seed, tol).map_err(numerical)?;
    let mut components = Vec::with_capacity(dec.components.len());
    for (i, comp) in dec.components.iter().enumerate() {
        components.push(component_summary(c, comp, i, &f, &e_n, inv, opts, ledger)?);
    }

    let power_table = if f.dim() == 1 && dec.components.len() == 1 {
        let table = cycles::verify_power_fixed_points(c, &dec.components[0].cycle, opts.max_power, tol)
            .map_err(numerical)?;
        ledger.flag("dim F(power m) is 1 exactly for m coprime to the period", "cycles", table.all_pass(tol));
        Some(PowerSummary {
            period: table.period,
            rows: table
                .rows
                .iter()
                .map(|r| PowerRow { m: r.m, fixed_dim: r.fixed_dim, gcd: r.gcd, pass: r.pass })
                .collect(),
            fd_distance: table.fd_distance,
            d_minimal: table.d_minimal,
            restrictions_ergodic: table.restrictions_ergodic,
        })
    } else {
        None
    };

    Ok(AnalysisReport {
        schema_version: REPORT_SCHEMA_VERSION,
        input: summarize_input(&Input::Channel(c.clone())),
        settings: Settings {
            tolerances: *tol,
            seed,
            max_power: opts.max_power,
            cesaro_steps: opts.cesaro_steps,
            gap_horizon: opts.gap_horizon,
        },
        faithful: true,
        min_invariant_eigenvalue: inv.min_eigenvalue,
        dims: Dims {
            fixed_points: f.dim(),
            multiplicative_domain: m.dim(),
            dfa: n.dim(),
            dfa_center: Some(n_center.dim()),
            stable: Some(stable.dim()),
        },
        fixed_points_abelian: Some(f.is_abelian(tol)),
        peripheral_eigenvalues: p.eigenvalues.iter().map(|&z| pair(z)).collect(),
        peripheral_clusters: Some(
            p.clusters
                .iter()
                .map(|k| Cluster { value: pair(k.value), algebraic: k.algebraic, geometric: k.geometric })
                .collect(),
        ),
        dfa: DfaSummary {
            method: "intersection-chain".into(),
            chain_dims: Some(dfa.chain_dims.clone()),
            stabilization_index: Some(dfa.stabilization_index),
            word_dims: dfa.word_dims.clone(),
            word_distance: dfa.word_distance,
        },
        invariant_states: Some(InvariantStates { blocks, parameters }),
        components: Some(components),
        power_table,
        gap: Some(GapSummary {
            eps_finite: gap.eps_finite,
            eps_asymptotic: gap.eps_asymptotic,
            max_nonperipheral: gap.max_nonperipheral,
            horizon: gap.horizon,
            no_uniform_bound: gap.no_uniform_bound,
        }),
        oqrw: None,
        undetermined: Vec::new(),
        checks: Vec::new(),
    })
}

#[allow(clippy::too_many_arguments)]
fn component_summary(
    c: &ChannelSpec,
    comp: &MfncComponent,
    index: usize,
    f: &OperatorAlgebra,
    e_n: &algebra::ConditionalExpectation,
    inv: &InvariantStateReport,
    opts: &Options,
    ledger: &mut Ledger,
) -> Result<ComponentSummary, Failure> {
    let tol = &opts.tol;
    let eq = tol.eq_tol;
    let tag = |s: &str| format!("component {index}: {s}");
    let cycle = &comp.cycle;
    let d = cycle.period;
    let w = &comp.isometry;
    let global: Vec<CMat> = cycle.cyclic_projections.iter().map(|q| w * q * w.adjoint()).collect();
    ledger.push(&tag("channel steps the cyclic projections down by one"), "cycles", cycle.numbering_defect, 100.0 * eq);

    let cd = cycles::component_decompose(c, comp, e_n, tol).map_err(numerical)?;
    ledger.push(&tag("left factors are isomorphic along the cycle"), "cycles", cd.isomorphism_residual, 100.0 * eq);
    ledger.push(&tag("block form reproduces the channel"), "cycles", cd.reconstruction_defect, 100.0 * eq);
    ledger.push(&tag("block states are carried along the cycle"), "cycles", cd.state_defect, 10.0 * eq);
    ledger.flag(&tag("every round trip has the single peripheral eigenvalue 1"), "cycles", cd.round_trips_ergodic(tol));

    let sk = cycles::structured_kraus(c, &cd, tol).map_err(numerical)?;
    ledger.push(&tag("structured Kraus operators reproduce the channel"), "cycles", sk.residual, eq);

    let fb = cycles::fixed_multiblock(c, &cd, f, opts.seed, tol).map_err(numerical)?;
    ledger.push(&tag("fixed points match the block embedding"), "cycles", fb.f_distance, 10.0 * eq);
    ledger.push(&tag("central projections of F are reproduced"), "cycles", fb.center_defect, 100.0 * eq);
    ledger.push(&tag("channel acts as the reduced maps on fixed blocks"), "cycles", fb.psi_residual, 100.0 * eq);
    ledger.push(&tag("reduced maps agree with the cycle maps on diagonal blocks"), "cycles", fb.psi_block_defect, 100.0 * eq);
    let psi_dfa = fb.psi_dfa_distance.iter().cloned().fold(0.0, f64::max);
    ledger.push(&tag("reduced maps have the diagonal dfa"), "cycles", psi_dfa, 10.0 * eq);
    let wrong_periods = fb.psi_periods.iter().filter(|&&q| q != d).count();
    ledger.push(&tag("reduced maps have the component period"), "cycles", wrong_periods as f64, 0.0);

    let k = fb.eigenspaces.len();
    let omegas: Vec<CMat> = fb
        .eigenspaces
        .iter()
        .map(|l| linalg::identity(l.ncols()) * C64::new(1.0 / l.ncols() as f64, 0.0))
        .collect();
    let lambdas = vec![1.0 / k as f64; k];
    let xi = fb.invariant_state(&lambdas, &omegas).map_err(numerical)?;
    let xi_residual = linalg::trace_norm_hermitian(&(c.transfer().apply_pre(&xi) - &xi));
    ledger.push(&tag("sampled invariant state is invariant"), "cycles", xi_residual, 10.0 * eq);
    let z = &cd.projection;
    let restricted = z * &inv.rho_max * z;
    let mass = linalg::trace(&restricted).re;
    if mass > tol.rank_tol {
        let member = fb.family_residual(&(restricted / C64::new(mass, 0.0)));
        ledger.push(&tag("rho_max restricted to the component lies in the family"), "cycles", member, 10.0 * eq);
    }

    Ok(ComponentSummary {
        rank: rank(&comp.projection),
        period: d,
        omega: pair(cycle.omega()),
        cyclic_projection_ranks: global.iter().map(rank).collect(),
        cyclic_projections: global.iter().map(format::mat_to_json).collect(),
        numbering_defect: cycle.numbering_defect,
        blocks: BlockSummary {
            left_dim: cd.left_dim,
            right_dims: cd.right_dims.clone(),
            isomorphism_residual: cd.isomorphism_residual,
            reconstruction_defect: cd.reconstruction_defect,
            state_defect: cd.state_defect,
            round_trips_ergodic: cd.round_trips_ergodic(tol),
            xi_kraus_counts: cd.xi.iter().map(|x| x.kraus.len()).collect(),
            structured_kraus_count: sk.channel.kraus.len(),
            structured_kraus_residual: sk.residual,
        },
        fixed: FixedSummary {
            eigenvalues: fb.eigenvalues.iter().map(|&z| pair(z)).collect(),
            eigenspace_dims: fb.eigenspaces.iter().map(|l| l.ncols()).collect(),
            f_distance: fb.f_distance,
            center_defect: fb.center_defect,
            psi_residual: fb.psi_residual,
            psi_block_defect: fb.psi_block_defect,
            psi_dfa_distance: fb.psi_dfa_distance.clone(),
            psi_periods: fb.psi_periods.clone(),
        },
    })
}

fn oqrw_checks(
    w: &OqrwSpec,
    c: &ChannelSpec,
    m: &OperatorAlgebra,
    faithful: bool,
    opts: &Options,
    ledger: &mut Ledger,
) -> Result<OqrwSummary, Failure> {
    let tol = &opts.tol;
    let eq = tol.eq_tol;
    let m_walk = oqrw::oqrw_multiplicative_domain(w, tol);
    let m_dist = numerics::subspace_distance(&m_walk.space, &m.space).map_err(numerical)?;
    ledger.push("walk multiplicative domain matches the generic one", "oqrw", m_dist, 10.0 * eq);
    let walk_dfa = oqrw::oqrw_dfa(w, None, tol).map_err(numerical)?;
    let generic_n = if faithful {
        structure::dfa_chain(c, tol).map_err(numerical)?.0
    } else {
        structure::dfa_word_commutant(c, tol).map_err(numerical)?.0
    };
    let n_dist = numerics::subspace_distance(&walk_dfa.algebra.space, &generic_n.space).map_err(numerical)?;
    ledger.push("walk dfa matches the generic one", "oqrw", n_dist, 10.0 * eq);
    if faithful {
        ledger.push("dfa has no off-diagonal part", "oqrw", walk_dfa.off_diagonal.dim() as f64, 0.0);
    }
    Ok(OqrwSummary {
        multiplicative_domain_dim: m_walk.dim(),
        dfa_dim: walk_dfa.algebra.dim(),
        diagonal_dim: walk_dfa.diagonal.dim(),
        off_diagonal_dim: walk_dfa.off_diagonal.dim(),
        dead_vertices: walk_dfa.dead_vertices.clone(),
        diagonal_forced: walk_dfa.diagonal_forced,
        path_rounds: walk_dfa.rounds,
        homogeneous: w.homogeneous,
        cyclic: w.cyclic,
    })
}

/// Largest dimension for which the quadratic-cost sampled suites run.
const FULL_SUITE_MAX_DIM: usize = 12;

#[allow(clippy::too_many_arguments)]
fn full_suite(
    c: &ChannelSpec,
    fixed: &structure::FixedPoints,
    m: &OperatorAlgebra,
    inv: &InvariantStateReport,
    input: &Input,
    opts: &Options,
    ledger: &mut Ledger,
) -> Result<(), Failure> {
    let tol = &opts.tol;
    let eq = tol.eq_tol;
    let seed = opts.seed;
    let d = c.dim;

    ledger.push("sampled Schwarz inequality", "channel", checks::schwarz_defect(c, 8, seed), 10.0 * eq);
    let (kraus_diff, count, choi_rank) = checks::minimal_kraus_defect(c, tol).map_err(numerical)?;
    ledger.push("minimal Kraus operators reproduce the channel", "channel", kraus_diff, 10.0 * eq);
    ledger.push("minimal Kraus count equals the Choi rank", "channel", count.abs_diff(choi_rank) as f64, 0.0);
    let p5 = c.power(5).map_err(numerical)?.mat;
    let p23 = c.power(2).map_err(numerical)?.compose(&c.power(3).map_err(numerical)?).mat;
    ledger.push("powers compose", "channel", numerics::rel_diff(&p5, &p23), 5.0 * eq);

    let grams = [&fixed.space, &m.space].iter().map(|s| checks::gram_defect(&s.basis)).fold(0.0, f64::max);
    ledger.push("subspace bases are orthonormal", "numerics", grams, eq);
    ledger.push(
        "multiplicative domain satisfies the product identities",
        "structure",
        checks::multiplicativity_defect(c, m, 4, seed),
        10.0 * eq,
    );

    if let Input::Oqrw(w) = input
        && w.homogeneous
        && let Ok(local) = w.local_map(tol)
        && let Ok(local_inv) = structure::invariant_states(&local, tol)
        && let Ok(lift) = w.uniform_lift(&local_inv.rho_max)
    {
        let r = linalg::trace_norm_hermitian(&(c.transfer().apply_pre(&lift) - &lift));
        ledger.push("uniform lift of a local invariant state is invariant", "oqrw", r, 10.0 * eq);
    }

    if !inv.faithful {
        return Ok(());
    }
    let f = fixed.algebra(tol).expect("faithful case yields an algebra");
    let p = structure::peripheral_subalgebra(c, inv, tol).map_err(numerical)?;
    let n = OperatorAlgebra::from_subspace(p.m_r.clone(), tol).map_err(numerical)?;
    let fs = algebra::atomic_structure(&f, seed, tol).map_err(numerical)?;
    let ns = algebra::atomic_structure(&n, seed, tol).map_err(numerical)?;
    ledger.push(
        "Wedderburn data reconstruct F and N",
        "algebra",
        fs.reconstruction_defect(&f).max(ns.reconstruction_defect(&n)),
        10.0 * eq,
    );
    ledger.push("E_N fixes the peripheral eigenmatrices", "structure", checks::peripheral_fixed_by_e_n(&p), 10.0 * eq);

    let horizon = (2 * d * d).min(512);
    let mut projections = ns.central_projections.clone();
    let dec = cycles::mfnc_decompose(c, &f, &n, seed, tol).map_err(numerical)?;
    for comp in &dec.components {
        let w = &comp.isometry;
        projections.extend(comp.cycle.cyclic_projections.iter().map(|q| w * q * w.adjoint()));
    }
    ledger.push(
        "channel images of projections in N stay projections",
        "structure",
        checks::preserved_projection_defect(c, &projections, horizon),
        100.0 * eq,
    );

    let alt = cycles::mfnc_decompose(c, &f, &n, seed.wrapping_add(1), tol).map_err(numerical)?;
    ledger.push("cyclic resolution does not depend on the seed", "cycles", resolution_distance(&dec, &alt), 10.0 * eq);

    if d <= FULL_SUITE_MAX_DIM {
        ledger.push("multiplicative domains of powers decrease", "structure", monotone_chain_defect(c, tol), 10.0 * eq);
    }
    Ok(())
}

fn global_projections(dec: &cycles::MfncDecomposition) -> Vec<CMat> {
    dec.components
        .iter()
        .flat_map(|comp| comp.cycle.cyclic_projections.iter().map(|q| &comp.isometry * q * comp.isometry.adjoint()))
        .collect()
}

/// Matches each projection of `a` to its nearest in `b`; `1` if the counts differ.
fn resolution_distance(a: &cycles::MfncDecomposition, b: &cycles::MfncDecomposition) -> f64 {
    let (pa, pb) = (global_projections(a), global_projections(b));
    if pa.len() != pb.len() {
        return 1.0;
    }
    pa.iter()
        .map(|p| pb.iter().map(|q| linalg::spectral_norm(&(p - q))).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Containment defect of `M(Φⁿ⁺¹)` in `M(Φⁿ)`, up to the stabilization of the chain.
fn monotone_chain_defect(c: &ChannelSpec, tol: &Tolerances) -> f64 {
    let d = c.dim;
    let mut prev: MatrixSubspace = structure::multiplicative_domain_power(c, 1, tol).space;
    let mut worst: f64 = 0.0;
    for n in 2..=(d * d) {
        let next = structure::multiplicative_domain_power(c, n, tol).space;
        worst = worst.max(checks::containment_defect(&next, &prev));
        let stable = next.dim() == prev.dim();
        prev = next;
        if stable {
            break;
        }
    }
    worst
}
