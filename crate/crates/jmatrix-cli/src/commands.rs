use std::f64::consts::PI;
use std::fmt::Write as _;

use jmatrix::forward::{bound_states, eigen_tridiag, phase_shifts, s_matrix, Basis, BoundState};
use jmatrix::inverse::{invert as run_inversion, QuadratureSpec, ScatteringInput, TaperSpec};
use jmatrix::refine::refine_hamiltonian;
use jmatrix::well::sample_dataset;

use crate::error::CliError;
use crate::files::{self, csv, num, BasisHeader, BasisKind};
use crate::{DatasetArgs, ForwardArgs, InvertArgs, RefineArgs};

fn positive(name: &str, value: f64) -> Result<f64, CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {value}")))
    }
}

/// Distance between two phases modulo π.
fn phase_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn bound_block(states: &[BoundState]) -> String {
    csv(&["kappa", "norm_const"], states.iter().map(|b| vec![b.kappa, b.norm_const]))
}

pub fn dataset(args: &DatasetArgs) -> Result<(), CliError> {
    let k0 = positive("k0", args.k0)?;
    positive("u0", args.u0)?;
    let input = sample_dataset(args.u0, k0, args.points).map_err(|e| CliError::Usage(e.to_string()))?;
    let path = files::write_file(&args.out_dir, "dataset.txt", &files::format_dataset(&input))?;
    println!("wrote {} ({} samples, {} bound states)", path.display(), input.samples.len(), input.bound_states.len());
    Ok(())
}

pub fn forward(args: &ForwardArgs) -> Result<(), CliError> {
    let h = files::read_hamiltonian(&args.hamiltonian)?;
    let k0 = positive("k0", args.k0)?;
    if args.points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    let ks: Vec<f64> = (1..=args.points).map(|i| k0 * i as f64 / args.points as f64).collect();
    let delta = phase_shifts(&h, &ks).map_err(|e| CliError::solver("phase", e))?;
    let mut rows = Vec::with_capacity(ks.len());
    for (&k, &d) in ks.iter().zip(&delta) {
        let s = s_matrix(&h, k).map_err(|e| CliError::solver("s-matrix", e))?;
        rows.push(vec![k, d, s.re, s.im]);
    }
    let states = bound_states(&h).map_err(|e| CliError::solver("bound-states", e))?;
    let phase = files::write_file(&args.out_dir, "phase.csv", &csv(&["k", "delta", "re_s", "im_s"], rows))?;
    let bound = files::write_file(&args.out_dir, "bound_states.csv", &bound_block(&states))?;
    println!("wrote {} and {}", phase.display(), bound.display());
    for b in &states {
        println!("bound state: kappa = {}, M = {}", num(b.kappa), num(b.norm_const));
    }
    Ok(())
}

fn inversion_basis(args: &InvertArgs, ell: u32) -> Result<Basis, CliError> {
    let scale = match (args.basis, args.rho, args.bscale) {
        (BasisKind::Osc, Some(rho), None) => positive("rho", rho)?,
        (BasisKind::Lag, None, Some(b)) => positive("bscale", b)?,
        (BasisKind::Osc, ..) => return Err(CliError::Usage("basis osc needs --rho and no --bscale".into())),
        (BasisKind::Lag, ..) => return Err(CliError::Usage("basis lag needs --bscale and no --rho".into())),
    };
    BasisHeader { kind: args.basis, ell, scale, n: args.n }.build()
}

fn truncate(input: ScatteringInput, k0: Option<f64>) -> Result<ScatteringInput, CliError> {
    let Some(k0) = k0 else {
        return Ok(input);
    };
    let k0 = positive("k0", k0)?;
    let samples: Vec<(f64, f64)> = input.samples.iter().copied().filter(|s| s.0 <= k0 * (1.0 + 1e-12)).collect();
    ScatteringInput::new(input.ell, samples, input.bound_states)
        .map_err(|e| CliError::Usage(format!("--k0 {k0} leaves unusable data: {e}")))
}

pub fn invert(args: &InvertArgs) -> Result<(), CliError> {
    let input = truncate(files::read_dataset(&args.dataset)?, args.k0)?;
    if args.n == 0 {
        return Err(CliError::Usage("--N must be at least 1".into()));
    }
    if args.nodes == 0 {
        return Err(CliError::Usage("--nodes must be at least 1".into()));
    }
    let basis = inversion_basis(args, input.ell)?;
    let taper = TaperSpec::for_basis(&basis, input.k0, args.n, positive("taper-width", args.taper_width)?);
    let quad = QuadratureSpec { points: args.nodes, ..QuadratureSpec::default() };
    let inv = run_inversion(&input, args.n, &basis, &taper, &quad)?;
    let h = &inv.hamiltonian;

    let data: Vec<(f64, f64)> = input.samples.iter().copied().filter(|s| s.0 > 0.0).collect();
    let ks: Vec<f64> = data.iter().map(|s| s.0).collect();
    let back = phase_shifts(h, &ks).map_err(|e| CliError::solver("round-trip", e))?;
    let mut worst = (0.0f64, 0.0f64);
    let rows: Vec<Vec<f64>> = data
        .iter()
        .zip(&back)
        .map(|(&(k, d), &f)| {
            let gap = phase_gap(f, d);
            if gap > worst.0 {
                worst = (gap, k);
            }
            vec![k, d, f, gap]
        })
        .collect();
    let spectral = eigen_tridiag(h).map_err(|e| CliError::solver("spectral", e))?;

    let d = &inv.diagnostics;
    let mismatch = d.bound_state_mismatch();
    let mut report = String::from("# inversion diagnostics\n");
    let _ = writeln!(report, "order {}", args.n);
    let _ = writeln!(report, "k0 {}", num(input.k0));
    let _ = writeln!(report, "roundtrip_max_dev_model {}", num(d.roundtrip_max_dev));
    let _ = writeln!(report, "roundtrip_at_model {}", num(d.roundtrip_at));
    let _ = writeln!(report, "roundtrip_max_dev_data {}", num(worst.0));
    let _ = writeln!(report, "roundtrip_at_data {}", num(worst.1));
    let _ = writeln!(report, "kernel_residual_max {}", num(d.kernel_residual_max));
    let _ = writeln!(report, "a0_spread {}", num(d.a0_spread));
    let _ = writeln!(report, "quadrature_error {}", num(d.quadrature_error));
    let _ = writeln!(report, "quadrature_nodes {}", d.nodes);
    for b in &d.input_bound_states {
        let _ = writeln!(report, "input_bound_state {} {}", num(b.kappa), num(b.norm_const));
    }
    for b in &d.forward_bound_states {
        let _ = writeln!(report, "forward_bound_state {} {}", num(b.kappa), num(b.norm_const));
    }
    let _ = writeln!(report, "bound_state_mismatch {mismatch}");

    let dir = &args.out_dir;
    files::write_file(dir, "hamiltonian.txt", &files::format_hamiltonian(h))?;
    files::write_file(dir, "potential.txt", &files::format_potential(h))?;
    let spectral_path =
        files::write_file(dir, "spectral.txt", &files::format_spectral(&spectral, &BasisHeader::of(&h.basis, args.n)))?;
    files::write_file(dir, "roundtrip.csv", &csv(&["k", "delta_data", "delta_forward", "deviation"], rows))?;
    files::write_file(dir, "diagnostics.txt", &report)?;

    println!("wrote hamiltonian.txt, potential.txt, spectral.txt, roundtrip.csv, diagnostics.txt to {}", dir.display());
    println!("round-trip max deviation {} at k = {}", num(d.roundtrip_max_dev), num(d.roundtrip_at));
    if mismatch {
        println!(
            "bound-state mismatch: the data have {} bound state(s), the reconstruction has {}",
            d.input_bound_states.len(),
            d.forward_bound_states.len()
        );
        if let Some(b) = d.input_bound_states.first() {
            println!(
                "suggestion: jmatrix refine {} --kappa {} --norm-const {}",
                spectral_path.display(),
                num(b.kappa),
                num(b.norm_const)
            );
        }
    }
    Ok(())
}

pub fn refine(args: &RefineArgs) -> Result<(), CliError> {
    let (spectral, header) = files::read_spectral(&args.spectral)?;
    positive("kappa", args.kappa)?;
    positive("norm-const", args.norm_const)?;
    let Basis::Oscillator(p) = header.build()? else {
        return Err(CliError::solver("refine", "refinement needs spectral data in the oscillator basis"));
    };
    let (refined, h) =
        refine_hamiltonian(&spectral, &p, args.kappa, args.norm_const).map_err(|e| CliError::solver("refine", e))?;
    let states = bound_states(&h).map_err(|e| CliError::solver("bound-states", e))?;
    let dir = &args.out_dir;
    files::write_file(dir, "spectral.txt", &files::format_spectral(&refined, &header))?;
    files::write_file(dir, "hamiltonian.txt", &files::format_hamiltonian(&h))?;
    println!("wrote spectral.txt and hamiltonian.txt to {}", dir.display());
    let last = refined.lambda.len() - 1;
    println!(
        "lambda_0 = {}, Z_0 = {}, Z_{last} = {}",
        num(refined.lambda[0]),
        num(refined.zlast[0]),
        num(refined.zlast[last])
    );
    for b in &states {
        println!("bound state: kappa = {}, M = {}", num(b.kappa), num(b.norm_const));
    }
    Ok(())
}
