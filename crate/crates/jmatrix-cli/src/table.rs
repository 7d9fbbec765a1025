//! Spectral table of the U0 = 2 square well at N = 7, ρ = R/2: stored
//! step-one data beside their refinement to the exact bound state.

use std::fmt::Write as _;
use std::path::Path;

use jmatrix::forward::{bound_states, spectral_to_jacobi, Basis, BoundState, SpectralData};
use jmatrix::refine::refine;
use jmatrix::well::well_bound_states;

use crate::error::CliError;
use crate::files::{self, csv};
use crate::TableArgs;

const STEP_ONE: &str = include_str!("../data/table_step_one.txt");
const DEPTH: f64 = 2.0;

/// Reference refined entries (λ_j, Z_{N−1,j}); only j = 0 and the last weight move.
const REFERENCE_LAMBDA0: f64 = -0.0353279575;
const REFERENCE_Z0: f64 = 0.0362075259;
const REFERENCE_ZLAST: f64 = 0.6183926387;
const REFERENCE_STEP_ONE: BoundState = BoundState { kappa: 0.6512647458, norm_const: 1.6017576599 };
const REFERENCE_REFINED: BoundState = BoundState { kappa: 0.6380449999, norm_const: 1.5833238674 };

fn forward_check(s: &SpectralData, basis: &Basis) -> Result<BoundState, CliError> {
    let h = spectral_to_jacobi(s, basis.clone()).map_err(|e| CliError::solver("jacobi", e))?;
    let states = bound_states(&h).map_err(|e| CliError::solver("bound-states", e))?;
    states.first().copied().ok_or_else(|| CliError::solver("bound-states", "no bound state"))
}

fn norm(s: &SpectralData) -> f64 {
    s.zlast.iter().map(|z| z * z).sum()
}

pub fn run(args: &TableArgs) -> Result<(), CliError> {
    let (left, header) = files::parse_spectral(Path::new("table_step_one.txt"), STEP_ONE)?;
    let basis = header.build()?;
    let Basis::Oscillator(p) = basis else {
        return Err(CliError::solver("table", "stored table is not in the oscillator basis"));
    };
    let target = well_bound_states(DEPTH)[0];
    let right = refine(&left, &p, target.kappa, target.norm_const).map_err(|e| CliError::solver("refine", e))?;
    let last = left.lambda.len() - 1;
    let mut reference = left.clone();
    reference.lambda[0] = REFERENCE_LAMBDA0;
    reference.zlast[0] = REFERENCE_Z0;
    reference.zlast[last] = REFERENCE_ZLAST;

    let mut out = String::new();
    let _ = writeln!(out, "N = {}, rho = {}, U0 = {DEPTH}", left.lambda.len(), p.rho);
    for (name, s, want) in [("step one", &left, REFERENCE_STEP_ONE), ("refined ", &right, REFERENCE_REFINED)] {
        let b = forward_check(s, &basis)?;
        let _ = writeln!(
            out,
            "{name}: kappa = {:.10} (reference {:.10}, delta {:+.1e}), M = {:.10} (reference {:.10}, delta {:+.1e}), sum Z^2 = {:.12}",
            b.kappa,
            want.kappa,
            b.kappa - want.kappa,
            b.norm_const,
            want.norm_const,
            b.norm_const - want.norm_const,
            norm(s)
        );
    }
    let _ = writeln!(
        out,
        "{:>2} | {:>13} {:>14} | {:>13} {:>14} | {:>9} {:>9}",
        "j", "Z step one", "lambda", "Z refined", "lambda", "dZ", "dlambda"
    );
    let mut rows = Vec::new();
    for j in 0..=last {
        let (dz, dl) = (right.zlast[j] - reference.zlast[j], right.lambda[j] - reference.lambda[j]);
        let _ = writeln!(
            out,
            "{j:>2} | {:>13.10} {:>14.10} | {:>13.10} {:>14.10} | {dz:>+9.1e} {dl:>+9.1e}",
            left.zlast[j], left.lambda[j], right.zlast[j], right.lambda[j]
        );
        rows.push(vec![
            j as f64,
            left.zlast[j],
            left.lambda[j],
            right.zlast[j],
            right.lambda[j],
            reference.zlast[j],
            reference.lambda[j],
        ]);
    }
    print!("{out}");
    if let Some(dir) = &args.out_dir {
        let columns =
            ["j", "z_step_one", "lambda_step_one", "z_refined", "lambda_refined", "z_reference", "lambda_reference"];
        let path = files::write_file(dir, "table.csv", &csv(&columns, rows))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
