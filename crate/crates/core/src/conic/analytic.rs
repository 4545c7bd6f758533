//! Small cone programs with closed-form optima, for checking the solver.

use super::program::{Affine, ConicProgram, ConstraintClass};
use super::solver::{certify, solve, SolveOptions, SolveStatus, DEFAULT_TOL};

const C: ConstraintClass = ConstraintClass::Auxiliary;

pub struct AnalyticCase {
    pub name: &'static str,
    pub program: ConicProgram,
    pub objective: f64,
    /// Coordinates fixed by the optimum; degenerate ones are left out.
    pub point: Vec<(usize, f64)>,
}

/// maximise −‖z − c‖² over the unit box.
fn box_projection(c: [f64; 3]) -> ConicProgram {
    let mut p = ConicProgram::new();
    let z: Vec<usize> = (0..3).map(|i| p.add_var(format!("z{i}"))).collect();
    let t = p.add_var("t");
    p.set_objective(Affine::term(t, -1.0));
    let diff = z
        .iter()
        .zip(c)
        .map(|(&i, ci)| Affine::var(i).minus(&Affine::constant(ci)))
        .collect();
    p.add_rsoc(Affine::var(t), Affine::constant(1.0), diff, "epi", C);
    for &i in &z {
        p.add_nonneg(Affine::var(i), "lo", C);
        p.add_nonneg(Affine::constant(1.0).minus(&Affine::var(i)), "hi", C);
    }
    p
}

pub fn cases() -> Vec<AnalyticCase> {
    let mut out = vec![
        AnalyticCase {
            name: "box projection onto a vertex",
            program: box_projection([1.7, -0.4, 2.5]),
            objective: -(0.49 + 0.16 + 2.25),
            point: vec![(0, 1.0), (1, 0.0), (2, 1.0)],
        },
        AnalyticCase {
            name: "box projection onto a face",
            program: box_projection([1.7, -0.4, 0.35]),
            objective: -(0.49 + 0.16),
            point: vec![],
        },
    ];

    // minimise z subject to z·1 ≥ w², w = 2.
    let mut p = ConicProgram::new();
    let z = p.add_var("z");
    let w = p.add_var("w");
    p.set_objective(Affine::term(z, -1.0));
    p.add_rsoc(Affine::var(z), Affine::constant(1.0), vec![Affine::var(w)], "hyp", C);
    p.add_zero(Affine::var(w).minus(&Affine::constant(2.0)), "fix", C);
    out.push(AnalyticCase {
        name: "rotated cone at equality",
        program: p,
        objective: -4.0,
        point: vec![(z, 4.0), (w, 2.0)],
    });

    // maximise x + y over the unit disk.
    let mut p = ConicProgram::new();
    let x = p.add_var("x");
    let y = p.add_var("y");
    p.set_objective(Affine::var(x).plus(&Affine::var(y)));
    p.add_soc(Affine::constant(1.0), vec![Affine::var(x), Affine::var(y)], "disk", C);
    out.push(AnalyticCase {
        name: "linear objective over a disk",
        program: p,
        objective: 2f64.sqrt(),
        point: vec![(x, 0.5f64.sqrt()), (y, 0.5f64.sqrt())],
    });

    // minimise 2x + 3y subject to x ≥ 1, y ≥ 2, x + y ≥ 4.
    let mut p = ConicProgram::new();
    let x = p.add_var("x");
    let y = p.add_var("y");
    p.set_objective(Affine::term(x, -2.0).plus(&Affine::term(y, -3.0)));
    p.add_nonneg(Affine::var(x).minus(&Affine::constant(1.0)), "x", C);
    p.add_nonneg(Affine::var(y).minus(&Affine::constant(2.0)), "y", C);
    p.add_nonneg(
        Affine::var(x).plus(&Affine::var(y)).minus(&Affine::constant(4.0)),
        "sum",
        C,
    );
    out.push(AnalyticCase {
        name: "linear program",
        program: p,
        objective: -10.0,
        point: vec![(x, 2.0), (y, 2.0)],
    });

    // Distance from a = (3, −1, 2) to the plane x + 2y − 2z = 4.
    let a = [3.0, -1.0, 2.0];
    let n = [1.0, 2.0, -2.0];
    let mut p = ConicProgram::new();
    let v: Vec<usize> = (0..3).map(|i| p.add_var(format!("v{i}"))).collect();
    let t = p.add_var("t");
    p.set_objective(Affine::term(t, -1.0));
    let diff = v
        .iter()
        .zip(a)
        .map(|(&i, ai)| Affine::var(i).minus(&Affine::constant(ai)))
        .collect();
    p.add_soc(Affine::var(t), diff, "dist", C);
    let mut plane = Affine::constant(-4.0);
    for (&i, ni) in v.iter().zip(n) {
        plane.add_term(i, ni);
    }
    p.add_zero(plane, "plane", C);
    // n·a − 4 = −7, ‖n‖ = 3, foot = a + (7/9)·n.
    let foot: Vec<(usize, f64)> = v.iter().zip(a.iter().zip(n)).map(|(&i, (ai, ni))| (i, ai + 7.0 / 9.0 * ni)).collect();
    out.push(AnalyticCase {
        name: "distance to a plane",
        program: p,
        objective: -7.0 / 3.0,
        point: foot,
    });
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticOutcome {
    pub name: &'static str,
    pub status: SolveStatus,
    /// Largest absolute error of the objective and the fixed coordinates.
    pub error: f64,
    pub certified: bool,
}

/// Solves every case with default options and certifies at `10·tol`.
pub fn run_cases() -> Vec<AnalyticOutcome> {
    cases()
        .into_iter()
        .map(|c| match solve(&c.program, SolveOptions::default()) {
            Ok(r) => {
                let err = c
                    .point
                    .iter()
                    .map(|&(i, v)| (r.x[i] - v).abs())
                    .fold((r.objective - c.objective).abs(), f64::max);
                AnalyticOutcome {
                    name: c.name,
                    status: r.status,
                    error: err,
                    certified: certify(&c.program, &r, 10.0 * DEFAULT_TOL).pass,
                }
            }
            Err(_) => AnalyticOutcome {
                name: c.name,
                status: SolveStatus::NumericFailure,
                error: f64::INFINITY,
                certified: false,
            },
        })
        .collect()
}
