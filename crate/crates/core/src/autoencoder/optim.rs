//! First-order and quasi-Newton optimizers over a scalar objective.
//!
//! One call to [`Optimizer::step`] is one training epoch. Every optimizer
//! is deterministic: its only state is the history it accumulates.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait Objective {
    fn value(&mut self, x: &[f64]) -> Result<f64>;
    fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

pub trait Optimizer {
    /// Moves `x` one step and returns the objective at the new point.
    fn step(&mut self, x: &mut [f64], objective: &mut dyn Objective) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerConfig {
    GradientDescent {
        lr: f64,
    },
    Adam {
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
    Lbfgs {
        #[serde(default = "default_history")]
        history: usize,
        #[serde(default = "default_c1")]
        c1: f64,
        #[serde(default = "default_c2")]
        c2: f64,
        #[serde(default = "default_max_line_search")]
        max_line_search: usize,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}
fn default_history() -> usize {
    10
}
fn default_c1() -> f64 {
    1e-4
}
fn default_c2() -> f64 {
    0.9
}
fn default_max_line_search() -> usize {
    20
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Lbfgs {
            history: default_history(),
            c1: default_c1(),
            c2: default_c2(),
            max_line_search: default_max_line_search(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match *self {
            OptimizerConfig::GradientDescent { lr } => {
                if !(lr > 0.0 && lr.is_finite()) {
                    return bad(format!("learning rate must be positive, got {lr}"));
                }
            }
            OptimizerConfig::Adam { lr, beta1, beta2, eps } => {
                if !(lr > 0.0 && lr.is_finite()) {
                    return bad(format!("learning rate must be positive, got {lr}"));
                }
                if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
                    return bad(format!("Adam betas must lie in [0, 1), got {beta1}, {beta2}"));
                }
                if eps.is_nan() || eps <= 0.0 {
                    return bad(format!("Adam eps must be positive, got {eps}"));
                }
            }
            OptimizerConfig::Lbfgs {
                history,
                c1,
                c2,
                max_line_search,
            } => {
                if history == 0 || max_line_search == 0 {
                    return bad("L-BFGS history and line-search budget must be >= 1".into());
                }
                if !(0.0 < c1 && c1 < c2 && c2 < 1.0) {
                    return bad(format!("line-search constants need 0 < c1 < c2 < 1, got {c1}, {c2}"));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn Optimizer>> {
        self.validate()?;
        Ok(match *self {
            OptimizerConfig::GradientDescent { lr } => Box::new(GradientDescent { lr }),
            OptimizerConfig::Adam { lr, beta1, beta2, eps } => Box::new(Adam::new(lr, beta1, beta2, eps)),
            OptimizerConfig::Lbfgs {
                history,
                c1,
                c2,
                max_line_search,
            } => Box::new(Lbfgs::new(history, c1, c2, max_line_search)),
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub struct GradientDescent {
    pub lr: f64,
}

impl Optimizer for GradientDescent {
    fn step(&mut self, x: &mut [f64], objective: &mut dyn Objective) -> Result<f64> {
        let (_, g) = objective.value_and_gradient(x)?;
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= self.lr * gi;
        }
        objective.value(x)
    }
}

pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }
}

impl Optimizer for Adam {
    fn step(&mut self, x: &mut [f64], objective: &mut dyn Objective) -> Result<f64> {
        let (_, g) = objective.value_and_gradient(x)?;
        if self.m.len() != x.len() {
            self.m = vec![0.0; x.len()];
            self.v = vec![0.0; x.len()];
            self.t = 0;
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..x.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            x[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
        objective.value(x)
    }
}

/// Limited-memory BFGS with a strong-Wolfe line search.
pub struct Lbfgs {
    history: usize,
    c1: f64,
    c2: f64,
    max_line_search: usize,
    s_hist: VecDeque<Vec<f64>>,
    y_hist: VecDeque<Vec<f64>>,
    current: Option<(Vec<f64>, f64, Vec<f64>)>,
}

struct Probe {
    alpha: f64,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

impl Lbfgs {
    pub fn new(history: usize, c1: f64, c2: f64, max_line_search: usize) -> Self {
        Self {
            history,
            c1,
            c2,
            max_line_search,
            s_hist: VecDeque::new(),
            y_hist: VecDeque::new(),
            current: None,
        }
    }

    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let k = self.s_hist.len();
        let mut q = g.to_vec();
        let mut alphas = vec![0.0; k];
        for i in (0..k).rev() {
            let s = &self.s_hist[i];
            let y = &self.y_hist[i];
            let rho = 1.0 / dot(y, s);
            alphas[i] = rho * dot(s, &q);
            for (qj, yj) in q.iter_mut().zip(y) {
                *qj -= alphas[i] * yj;
            }
        }
        if let (Some(s), Some(y)) = (self.s_hist.back(), self.y_hist.back()) {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y), alpha) in self.s_hist.iter().zip(&self.y_hist).zip(&alphas) {
            let rho = 1.0 / dot(y, s);
            let beta = rho * dot(y, &q);
            for (qj, sj) in q.iter_mut().zip(s) {
                *qj += sj * (alpha - beta);
            }
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }

    fn probe(objective: &mut dyn Objective, x: &[f64], d: &[f64], alpha: f64) -> Result<Probe> {
        let trial: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let (f, g) = objective.value_and_gradient(&trial)?;
        let slope = dot(&g, d);
        Ok(Probe { alpha, f, g, slope })
    }

    /// Returns a point satisfying the strong Wolfe conditions, or the best
    /// Armijo point found within the evaluation budget.
    fn line_search(
        &self,
        objective: &mut dyn Objective,
        x: &[f64],
        d: &[f64],
        f0: f64,
        slope0: f64,
        alpha0: f64,
    ) -> Result<Option<Probe>> {
        let armijo = |p: &Probe| p.f <= f0 + self.c1 * p.alpha * slope0;
        let curvature = |p: &Probe| p.slope.abs() <= -self.c2 * slope0;
        let mut prev = Probe {
            alpha: 0.0,
            f: f0,
            g: Vec::new(),
            slope: slope0,
        };
        let mut alpha = alpha0;
        let mut evals = 0;
        while evals < self.max_line_search {
            let cur = Self::probe(objective, x, d, alpha)?;
            evals += 1;
            if !cur.f.is_finite() {
                alpha = 0.5 * (prev.alpha + alpha);
                continue;
            }
            if !armijo(&cur) || (evals > 1 && cur.f >= prev.f) {
                return self.zoom(objective, x, d, f0, slope0, prev, cur, evals);
            }
            if curvature(&cur) {
                return Ok(Some(cur));
            }
            if cur.slope >= 0.0 {
                return self.zoom(objective, x, d, f0, slope0, cur, prev, evals);
            }
            alpha *= 2.0;
            prev = cur;
        }
        Ok((prev.alpha > 0.0).then_some(prev))
    }

    #[allow(clippy::too_many_arguments)]
    fn zoom(
        &self,
        objective: &mut dyn Objective,
        x: &[f64],
        d: &[f64],
        f0: f64,
        slope0: f64,
        mut lo: Probe,
        mut hi: Probe,
        mut evals: usize,
    ) -> Result<Option<Probe>> {
        while evals < self.max_line_search {
            let width = hi.alpha - lo.alpha;
            let denom = 2.0 * (hi.f - lo.f - lo.slope * width);
            let mut alpha = if denom.abs() > 0.0 {
                lo.alpha - lo.slope * width * width / denom
            } else {
                f64::NAN
            };
            let (a, b) = if lo.alpha < hi.alpha {
                (lo.alpha, hi.alpha)
            } else {
                (hi.alpha, lo.alpha)
            };
            let margin = 0.1 * (b - a);
            if !alpha.is_finite() || alpha < a + margin || alpha > b - margin {
                alpha = 0.5 * (a + b);
            }
            let cur = Self::probe(objective, x, d, alpha)?;
            evals += 1;
            if !cur.f.is_finite() || cur.f > f0 + self.c1 * alpha * slope0 || cur.f >= lo.f {
                hi = cur;
            } else {
                if cur.slope.abs() <= -self.c2 * slope0 {
                    return Ok(Some(cur));
                }
                if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
            if (hi.alpha - lo.alpha).abs() < 1e-16 {
                break;
            }
        }
        Ok((lo.alpha > 0.0).then_some(lo))
    }
}

impl Optimizer for Lbfgs {
    fn step(&mut self, x: &mut [f64], objective: &mut dyn Objective) -> Result<f64> {
        let (f, g) = match self.current.take() {
            Some((cx, f, g)) if cx == x => (f, g),
            _ => {
                self.s_hist.clear();
                self.y_hist.clear();
                objective.value_and_gradient(x)?
            }
        };
        let gnorm = norm(&g);
        if !f.is_finite() || gnorm < 1e-14 {
            self.current = Some((x.to_vec(), f, g));
            return Ok(f);
        }
        let mut d = self.direction(&g);
        let mut slope = dot(&d, &g);
        if !slope.is_finite() || slope >= 0.0 {
            self.s_hist.clear();
            self.y_hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let alpha0 = if self.s_hist.is_empty() {
            (1.0 / gnorm).min(1.0)
        } else {
            1.0
        };
        let found = self.line_search(objective, x, &d, f, slope, alpha0)?;
        let Some(probe) = found else {
            self.s_hist.clear();
            self.y_hist.clear();
            self.current = Some((x.to_vec(), f, g));
            return Ok(f);
        };
        let s: Vec<f64> = d.iter().map(|v| probe.alpha * v).collect();
        let y: Vec<f64> = probe.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 * norm(&s) * norm(&y) {
            if self.s_hist.len() == self.history {
                self.s_hist.pop_front();
                self.y_hist.pop_front();
            }
            self.s_hist.push_back(s.clone());
            self.y_hist.push_back(y);
        }
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        self.current = Some((x.to_vec(), probe.f, probe.g));
        Ok(probe.f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f(x) = Σ cᵢ (xᵢ − 1)² with gradient computed analytically.
    struct Quadratic {
        c: Vec<f64>,
        evals: usize,
    }

    impl Objective for Quadratic {
        fn value(&mut self, x: &[f64]) -> Result<f64> {
            self.evals += 1;
            Ok(x.iter().zip(&self.c).map(|(xi, ci)| ci * (xi - 1.0).powi(2)).sum())
        }

        fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            let f = self.value(x)?;
            let g = x.iter().zip(&self.c).map(|(xi, ci)| 2.0 * ci * (xi - 1.0)).collect();
            Ok((f, g))
        }
    }

    /// Rosenbrock in two variables.
    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn value(&mut self, x: &[f64]) -> Result<f64> {
            Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
        }

        fn value_and_gradient(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
            let f = self.value(x)?;
            let g0 = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]);
            let g1 = 200.0 * (x[1] - x[0] * x[0]);
            Ok((f, vec![g0, g1]))
        }
    }

    fn run(opt: &mut dyn Optimizer, obj: &mut dyn Objective, x: &mut [f64], steps: usize) -> f64 {
        let mut f = f64::INFINITY;
        for _ in 0..steps {
            f = opt.step(x, obj).unwrap();
        }
        f
    }

    #[test]
    fn gradient_descent_converges_on_quadratic() {
        let mut obj = Quadratic {
            c: vec![1.0, 2.0],
            evals: 0,
        };
        let mut x = vec![0.0, 3.0];
        let f = run(&mut GradientDescent { lr: 0.1 }, &mut obj, &mut x, 200);
        assert!(f < 1e-12);
    }

    #[test]
    fn adam_converges_on_quadratic() {
        let mut obj = Quadratic {
            c: vec![1.0, 5.0],
            evals: 0,
        };
        let mut x = vec![-1.0, 2.0];
        let f = run(&mut Adam::new(0.05, 0.9, 0.999, 1e-8), &mut obj, &mut x, 2000);
        assert!(f < 1e-6, "{f}");
    }

    #[test]
    fn lbfgs_solves_rosenbrock() {
        let mut x = vec![-1.2, 1.0];
        let f = run(&mut Lbfgs::new(10, 1e-4, 0.9, 20), &mut Rosenbrock, &mut x, 100);
        assert!(f < 1e-12, "{f}");
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn lbfgs_monotone_on_quadratic() {
        let mut obj = Quadratic {
            c: vec![1.0, 10.0, 100.0],
            evals: 0,
        };
        let mut x = vec![5.0, -3.0, 2.0];
        let mut opt = Lbfgs::new(5, 1e-4, 0.9, 20);
        let mut last = f64::INFINITY;
        for _ in 0..30 {
            let f = opt.step(&mut x, &mut obj).unwrap();
            assert!(f <= last);
            last = f;
        }
        assert!(last < 1e-14);
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::GradientDescent { lr: 0.0 }.validate().is_err());
        assert!(OptimizerConfig::Lbfgs {
            history: 5,
            c1: 0.9,
            c2: 0.1,
            max_line_search: 10
        }
        .validate()
        .is_err());
        assert!(OptimizerConfig::default().validate().is_ok());
    }

    #[test]
    fn config_json_defaults() {
        let cfg: OptimizerConfig = serde_json::from_str(r#"{"kind":"lbfgs"}"#).unwrap();
        assert_eq!(cfg, OptimizerConfig::default());
        let cfg: OptimizerConfig = serde_json::from_str(r#"{"kind":"adam","lr":0.01}"#).unwrap();
        assert!(matches!(cfg, OptimizerConfig::Adam { beta1, .. } if beta1 == 0.9));
        assert!(serde_json::from_str::<OptimizerConfig>(r#"{"kind":"lbfgs","bogus":1}"#).is_err());
    }
}
