//! Canonical second-order-cone program.
//!
//! Model variables are free reals. Every cone constraint introduces one
//! slack variable per row, defined by an affine equality `slack = expr(x)`,
//! and the slack slice is placed in the cone. The canonical form is
//!
//! ```text
//! maximize  cᵀz + offset   subject to  A z = b,  z[slice] ∈ cone  for every slice
//! ```
//!
//! where `z` stacks model variables followed by slacks.

use serde::{Deserialize, Serialize};

use crate::cplx::C64;

/// Sparse affine expression `Σ coef·x[index] + constant`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        Self::term(i, 1.0)
    }

    pub fn term(i: usize, coef: f64) -> Self {
        Self {
            terms: vec![(i, coef)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, i: usize, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((i, coef));
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn add_scaled(&mut self, other: &Affine, s: f64) -> &mut Self {
        for &(i, c) in &other.terms {
            self.add_term(i, c * s);
        }
        self.constant += other.constant * s;
        self
    }

    pub fn plus(mut self, other: &Affine) -> Self {
        self.add_scaled(other, 1.0);
        self
    }

    pub fn minus(mut self, other: &Affine) -> Self {
        self.add_scaled(other, -1.0);
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.1 *= s;
        }
        self.constant *= s;
        self
    }

    /// Adds `Re(aᴴx) · s` where `x` occupies interleaved `(re, im)` pairs
    /// starting at `base`.
    pub fn add_re_inner(&mut self, a: &[C64], base: usize, s: f64) -> &mut Self {
        for (i, ai) in a.iter().enumerate() {
            self.add_term(base + 2 * i, ai.re * s);
            self.add_term(base + 2 * i + 1, ai.im * s);
        }
        self
    }

    /// Adds `Im(aᴴx) · s`.
    pub fn add_im_inner(&mut self, a: &[C64], base: usize, s: f64) -> &mut Self {
        for (i, ai) in a.iter().enumerate() {
            self.add_term(base + 2 * i, -ai.im * s);
            self.add_term(base + 2 * i + 1, ai.re * s);
        }
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }

    /// Sums duplicate indices and drops zeros.
    pub fn compact(&mut self) {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for &(i, c) in &self.terms {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => out.push((i, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
    }

    /// Largest magnitude among coefficients and constant.
    pub fn magnitude(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.1.abs())
            .fold(self.constant.abs(), f64::max)
    }
}

/// Rows `x[base..base + 2m]` of a complex vector, each scaled by `s`.
pub fn complex_rows(base: usize, m: usize, s: f64) -> Vec<Affine> {
    (0..2 * m).map(|i| Affine::term(base + i, s)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeKind {
    /// Every entry `≥ 0`.
    NonNegative,
    /// `z0 ≥ ‖z[1..]‖`.
    SecondOrder,
    /// `z0·z1 ≥ ‖z[2..]‖²`, `z0, z1 ≥ 0`.
    RotatedSecondOrder,
    /// Every entry `= 0`.
    Zero,
}

/// How a constraint is counted in problem-size reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintClass {
    Linear,
    Quadratic,
    /// Epigraph or reciprocal helper rows.
    Auxiliary,
    /// Simple bounds such as trust regions.
    Bound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub rows: Vec<Affine>,
    /// Index of the first slack variable in the canonical vector.
    pub slack_start: usize,
    pub tag: String,
    pub class: ConstraintClass,
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Distance-like violation of cone membership for the row values `v`
    /// (0 when inside).
    pub fn violation(kind: ConeKind, v: &[f64]) -> f64 {
        match kind {
            ConeKind::NonNegative => v.iter().map(|x| (-x).max(0.0)).fold(0.0, f64::max),
            ConeKind::Zero => v.iter().map(|x| x.abs()).fold(0.0, f64::max),
            ConeKind::SecondOrder => {
                let tail = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
                (tail - v[0]).max(0.0)
            }
            ConeKind::RotatedSecondOrder => {
                let (u, w) = (v[0], v[1]);
                let tail = v[2..].iter().map(|x| x * x).sum::<f64>();
                let lifted = ((u - w).powi(2) + 4.0 * tail).sqrt();
                (lifted - (u + w)).max(0.0) * 0.5
            }
        }
    }
}

/// A second-order-cone program over named real variables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub names: Vec<String>,
    /// Maximised.
    pub objective: Affine,
    pub cones: Vec<ConeBlock>,
    slack_count: usize,
}

/// Row counts per constraint class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub linear: usize,
    pub quadratic: usize,
    pub auxiliary: usize,
    pub bound: usize,
}

/// Result of checking a point against every constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCheck {
    /// Largest violation relative to the block's coefficient magnitude.
    pub worst: f64,
    pub worst_tag: String,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of model (free) variables.
    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// Number of canonical variables: model variables plus slacks.
    pub fn canonical_len(&self) -> usize {
        self.names.len() + self.slack_count
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        assert_eq!(
            self.slack_count, 0,
            "declare all variables before constraints"
        );
        self.names.push(name.into());
        self.names.len() - 1
    }

    /// Declares `m` complex scalars as interleaved `(re, im)` pairs and
    /// returns the first index.
    pub fn add_complex(&mut self, name: &str, m: usize) -> usize {
        let base = self.names.len();
        for i in 0..m {
            self.add_var(format!("{name}[{i}].re"));
            self.add_var(format!("{name}[{i}].im"));
        }
        base
    }

    pub fn set_objective(&mut self, obj: Affine) {
        self.objective = obj;
    }

    fn push(&mut self, kind: ConeKind, rows: Vec<Affine>, tag: &str, class: ConstraintClass) {
        let mut rows = rows;
        for r in &mut rows {
            r.compact();
        }
        let start = self.slack_count;
        self.slack_count += rows.len();
        self.cones.push(ConeBlock {
            kind,
            rows,
            slack_start: start,
            tag: tag.to_string(),
            class,
        });
    }

    /// `expr ≥ 0`.
    pub fn add_nonneg(&mut self, expr: Affine, tag: &str, class: ConstraintClass) {
        self.push(ConeKind::NonNegative, vec![expr], tag, class);
    }

    /// `expr = 0`.
    pub fn add_zero(&mut self, expr: Affine, tag: &str, class: ConstraintClass) {
        self.push(ConeKind::Zero, vec![expr], tag, class);
    }

    /// `t ≥ ‖w‖`.
    pub fn add_soc(&mut self, t: Affine, w: Vec<Affine>, tag: &str, class: ConstraintClass) {
        let mut rows = Vec::with_capacity(w.len() + 1);
        rows.push(t);
        rows.extend(w);
        self.push(ConeKind::SecondOrder, rows, tag, class);
    }

    /// `u·v ≥ ‖w‖²`, `u, v ≥ 0`.
    pub fn add_rsoc(
        &mut self,
        u: Affine,
        v: Affine,
        w: Vec<Affine>,
        tag: &str,
        class: ConstraintClass,
    ) {
        let mut rows = Vec::with_capacity(w.len() + 2);
        rows.push(u);
        rows.push(v);
        rows.extend(w);
        self.push(ConeKind::RotatedSecondOrder, rows, tag, class);
    }

    pub fn counts(&self) -> ClassCounts {
        let mut c = ClassCounts::default();
        for b in &self.cones {
            match b.class {
                ConstraintClass::Linear => c.linear += 1,
                ConstraintClass::Quadratic => c.quadratic += 1,
                ConstraintClass::Auxiliary => c.auxiliary += 1,
                ConstraintClass::Bound => c.bound += 1,
            }
        }
        c
    }

    pub fn count_tag(&self, tag: &str) -> usize {
        self.cones.iter().filter(|b| b.tag == tag).count()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Extends model-variable values with the slack values they define.
    pub fn complete_point(&self, x: &[f64]) -> Vec<f64> {
        let mut z = x.to_vec();
        for b in &self.cones {
            z.extend(b.rows.iter().map(|r| r.eval(x)));
        }
        z
    }

    /// Checks every cone at the model point `x`. Violations are divided by
    /// `max(1, row magnitude)` of the block.
    pub fn check_point(&self, x: &[f64]) -> PointCheck {
        let mut worst = 0.0;
        let mut worst_tag = String::new();
        for b in &self.cones {
            let v: Vec<f64> = b.rows.iter().map(|r| r.eval(x)).collect();
            let scale = b.rows.iter().map(Affine::magnitude).fold(1.0, f64::max);
            let viol = ConeBlock::violation(b.kind, &v) / scale;
            if viol > worst || viol.is_nan() {
                worst = if viol.is_nan() { f64::INFINITY } else { viol };
                worst_tag = b.tag.clone();
            }
        }
        PointCheck { worst, worst_tag }
    }

    /// Substitutes `x_j = c_j·x̂_j` in every row and in the objective, so
    /// the program's variables become `x̂`.
    pub fn scale_columns(&mut self, c: &[f64]) {
        assert_eq!(c.len(), self.num_vars());
        let apply = |e: &mut Affine| {
            for t in &mut e.terms {
                t.1 *= c[t.0];
            }
        };
        apply(&mut self.objective);
        for b in &mut self.cones {
            b.rows.iter_mut().for_each(apply);
        }
    }

    /// Divides every block by its largest coefficient or constant. Cones
    /// are invariant under positive scaling, so the feasible set is kept.
    pub fn equilibrate_rows(&mut self) {
        for b in &mut self.cones {
            let m = b.rows.iter().map(Affine::magnitude).fold(0.0, f64::max);
            if m > 0.0 && m.is_finite() {
                for r in &mut b.rows {
                    *r = std::mem::take(r).scaled(1.0 / m);
                }
            }
        }
    }

    /// Canonical interchange form.
    pub fn canonical(&self) -> CanonicalForm {
        let n_free = self.names.len();
        let mut names = self.names.clone();
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::with_capacity(self.cones.len());
        let mut row = 0;
        for blk in &self.cones {
            let start = n_free + blk.slack_start;
            for (j, expr) in blk.rows.iter().enumerate() {
                names.push(format!("{}#{}", blk.tag, j));
                a.push((row, start + j, 1.0));
                for &(i, c) in &expr.terms {
                    a.push((row, i, -c));
                }
                b.push(expr.constant);
                row += 1;
            }
            cones.push(CanonicalCone {
                kind: blk.kind,
                start,
                dim: blk.dim(),
                tag: blk.tag.clone(),
            });
        }
        let mut c = vec![0.0; names.len()];
        for &(i, v) in &self.objective.terms {
            c[i] += v;
        }
        CanonicalForm {
            n: names.len(),
            names,
            objective: c,
            objective_offset: self.objective.constant,
            a_triplets: a,
            b,
            cones,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&self.canonical())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCone {
    pub kind: ConeKind,
    pub start: usize,
    pub dim: usize,
    pub tag: String,
}

/// `maximize cᵀz + offset s.t. A z = b, z[start..start+dim] ∈ kind`.
/// `A` is given as `(row, col, value)` triplets; unlisted variables are free.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalForm {
    pub n: usize,
    pub names: Vec<String>,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub a_triplets: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub cones: Vec<CanonicalCone>,
}

impl CanonicalForm {
    /// Every cone slice is in range and no variable is in two slices.
    pub fn slices_valid(&self) -> bool {
        let mut owner = vec![false; self.n];
        for c in &self.cones {
            if c.start + c.dim > self.n {
                return false;
            }
            for o in &mut owner[c.start..c.start + c.dim] {
                if *o {
                    return false;
                }
                *o = true;
            }
        }
        true
    }

    /// Largest equality residual at `z`.
    pub fn equality_residual(&self, z: &[f64]) -> f64 {
        let mut r: Vec<f64> = self.b.iter().map(|b| -b).collect();
        for &(i, j, v) in &self.a_triplets {
            r[i] += v * z[j];
        }
        r.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ConicProgram {
        let mut p = ConicProgram::new();
        let x = p.add_var("x");
        let y = p.add_var("y");
        p.set_objective(Affine::var(x));
        p.add_soc(
            Affine::constant(1.0),
            vec![Affine::var(x), Affine::var(y)],
            "disk",
            ConstraintClass::Quadratic,
        );
        p.add_nonneg(
            Affine::var(y).minus(&Affine::constant(0.1)),
            "floor",
            ConstraintClass::Linear,
        );
        p.add_rsoc(
            Affine::var(y),
            Affine::constant(2.0),
            vec![Affine::var(x)],
            "hyp",
            ConstraintClass::Auxiliary,
        );
        p
    }

    #[test]
    fn canonical_form_is_consistent() {
        let p = toy();
        let f = p.canonical();
        assert_eq!(f.n, 2 + 3 + 1 + 3);
        assert!(f.slices_valid());
        let z = p.complete_point(&[0.3, 0.4]);
        assert!(f.equality_residual(&z) < 1e-15);
        let back: CanonicalForm = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn point_check_reports_violating_block() {
        let p = toy();
        assert_eq!(p.check_point(&[0.3, 0.4]).worst, 0.0);
        let c = p.check_point(&[0.9, 0.5]);
        assert!(c.worst > 0.0);
        assert_eq!(c.worst_tag, "disk");
        // 0.2 * 2 = 0.4 < 0.81
        let c = p.check_point(&[0.9, 0.0]);
        assert!(c.worst > 0.0);
    }

    #[test]
    fn class_counts() {
        let c = toy().counts();
        assert_eq!((c.linear, c.quadratic, c.auxiliary, c.bound), (1, 1, 1, 0));
    }

    #[test]
    fn complex_inner_rows() {
        let a = [C64::new(1.0, 2.0), C64::new(-0.5, 0.25)];
        let x = [0.3, -0.7, 1.1, 0.4];
        let xc = [C64::new(0.3, -0.7), C64::new(1.1, 0.4)];
        let want = crate::cplx::inner(&a, &xc);
        let mut re = Affine::zero();
        re.add_re_inner(&a, 0, 1.0);
        let mut im = Affine::zero();
        im.add_im_inner(&a, 0, 1.0);
        assert!((re.eval(&x) - want.re).abs() < 1e-15);
        assert!((im.eval(&x) - want.im).abs() < 1e-15);
    }

    #[test]
    fn rotated_violation_matches_definition() {
        assert_eq!(
            ConeBlock::violation(ConeKind::RotatedSecondOrder, &[2.0, 2.0, 2.0]),
            0.0
        );
        assert!(ConeBlock::violation(ConeKind::RotatedSecondOrder, &[1.0, 1.0, 1.5]) > 0.0);
        assert!(ConeBlock::violation(ConeKind::RotatedSecondOrder, &[-1.0, -1.0, 0.0]) > 0.0);
    }
}
