//! Human-readable rendering of reports.

use std::fmt::Write;

use crate::report::AnalysisReport;

/// `x` to ten significant digits.
pub fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..10).contains(&mag) {
        let decimals = (9 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s }
    } else {
        format!("{x:.9e}")
    }
}

fn complex(z: &[f64; 2]) -> String {
    let (re, im) = (z[0], z[1]);
    if im.abs() < 1e-15 {
        sig(re)
    } else if im < 0.0 {
        format!("{}-{}i", sig(re), sig(-im))
    } else {
        format!("{}+{}i", sig(re), sig(im))
    }
}

fn list(zs: &[[f64; 2]]) -> String {
    zs.iter().map(complex).collect::<Vec<_>>().join(", ")
}

pub fn render(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let o = &mut out;
    let label = if r.input.label.is_empty() { "(unlabelled)" } else { &r.input.label };
    let _ = writeln!(o, "input        {} {label}, D = {}, {} operators", r.input.kind, r.input.dim, r.input.kraus_count);
    let _ = writeln!(o, "faithful     {} (min eigenvalue of rho_max {})", r.faithful, sig(r.min_invariant_eigenvalue));
    let _ = writeln!(
        o,
        "dims         F = {}, M = {}, N = {}, Z(N) = {}, M_s = {}",
        r.dims.fixed_points,
        r.dims.multiplicative_domain,
        r.dims.dfa,
        opt(r.dims.dfa_center),
        opt(r.dims.stable)
    );
    if let Some(ab) = r.fixed_points_abelian {
        let _ = writeln!(o, "F abelian    {ab}");
    }
    let _ = writeln!(o, "peripheral   {}", list(&r.peripheral_eigenvalues));
    if let Some(chain) = &r.dfa.chain_dims {
        let _ = writeln!(o, "dfa chain    {chain:?}");
    }
    if let Some(w) = r.dfa.word_distance {
        let _ = writeln!(o, "word route   distance {}", sig(w));
    }
    if let Some(inv) = &r.invariant_states {
        let dims: Vec<String> = inv.blocks.iter().map(|b| format!("{}x{}", b.left_dim, b.right_dim)).collect();
        let _ = writeln!(o, "F blocks     [{}], {} state parameters", dims.join(", "), inv.parameters);
    }
    if let Some(comps) = &r.components {
        for (i, k) in comps.iter().enumerate() {
            let _ = writeln!(
                o,
                "component {i}  rank {}, period {}, Q ranks {:?}, left dim {}, right dims {:?}",
                k.rank, k.period, k.cyclic_projection_ranks, k.blocks.left_dim, k.blocks.right_dims
            );
            let _ = writeln!(
                o,
                "             structured Kraus {} (residual {}), T0 eigenvalues {}",
                k.blocks.structured_kraus_count,
                sig(k.blocks.structured_kraus_residual),
                list(&k.fixed.eigenvalues)
            );
        }
    }
    if let Some(pt) = &r.power_table {
        let dims: Vec<String> = pt.rows.iter().map(|row| format!("{}:{}", row.m, row.fixed_dim)).collect();
        let _ = writeln!(o, "dim F(m)     {}", dims.join(" "));
    }
    if let Some(g) = &r.gap {
        let _ = writeln!(
            o,
            "gap          asymptotic {}, finite {} (horizon {})",
            sig(g.eps_asymptotic),
            sig(g.eps_finite),
            g.horizon
        );
    }
    if let Some(w) = &r.oqrw {
        let _ = writeln!(
            o,
            "walk         M = {}, N = {} (diagonal {}, off-diagonal {}), dead vertices {:?}",
            w.multiplicative_domain_dim, w.dfa_dim, w.diagonal_dim, w.off_diagonal_dim, w.dead_vertices
        );
    }
    if !r.undetermined.is_empty() {
        let _ = writeln!(o, "undetermined {}", r.undetermined.join(", "));
    }
    let failed = r.checks.iter().filter(|c| !c.pass).count();
    let _ = writeln!(o, "checks       {} run, {} failed", r.checks.len(), failed);
    out.push_str(&ledger(r));
    out
}

/// One line per check: status, residual, tolerance, module and name.
pub fn ledger(r: &AnalysisReport) -> String {
    let mut out = String::new();
    for c in &r.checks {
        let status = if c.pass { "pass" } else { "FAIL" };
        let _ = writeln!(out, "  {status}  {:>16}  <= {:<10}  [{}] {}", sig(c.residual), sig(c.tolerance), c.module, c.name);
    }
    out
}

fn opt(x: Option<usize>) -> String {
    x.map_or_else(|| "undetermined".to_string(), |v| v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(sig(1.0), "1");
        assert_eq!(sig(std::f64::consts::PI), "3.141592654");
        assert_eq!(sig(-0.5), "-0.5");
        assert_eq!(sig(1.2345678901234e-12), "1.234567890e-12");
        assert_eq!(sig(f64::INFINITY), "inf");
    }
}
