//! Classical background metrics: inverse metric g^{ab}(x) with analytic first
//! and second coordinate derivatives, signature (−,+,+,+), coordinates
//! (t, x, y, z).

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

pub type Tensor2<D> = [[D; 4]; 4];

/// g^{ab} together with dg[k][a][b] = ∂_k g^{ab} and ddg[k][l][a][b] = ∂_k∂_l g^{ab}.
#[derive(Debug, Clone, Copy)]
pub struct MetricEval<D> {
    pub g: Tensor2<D>,
    pub dg: [Tensor2<D>; 4],
    pub ddg: [[Tensor2<D>; 4]; 4],
}

impl<D: Scalar> MetricEval<D> {
    fn zero() -> Self {
        let z = [[D::zero(); 4]; 4];
        Self { g: z, dg: [z; 4], ddg: [[z; 4]; 4] }
    }

    /// Embeds an `f64` evaluation as constants of another scalar type.
    pub fn lift(e: &MetricEval<f64>) -> Self {
        let t = |m: &Tensor2<f64>| m.map(|row| row.map(D::from));
        Self { g: t(&e.g), dg: e.dg.each_ref().map(t), ddg: e.ddg.each_ref().map(|r| r.each_ref().map(t)) }
    }

    fn minkowski(c: f64) -> Self {
        let mut e = Self::zero();
        e.g[0][0] = D::from(-1.0 / (c * c));
        for i in 1..4 {
            e.g[i][i] = D::one();
        }
        e
    }
}

/// Newtonian potential φ = φ₀ + g·x − GM/|x|, a superposition of a constant,
/// a uniform field and a point mass at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Potential {
    pub phi0: f64,
    pub gradient: [f64; 3],
    pub gm: f64,
}

impl Potential {
    pub fn uniform(phi0: f64) -> Self {
        Self { phi0, ..Self::default() }
    }

    pub fn linear(gradient: [f64; 3]) -> Self {
        Self { gradient, ..Self::default() }
    }

    pub fn point_mass(gm: f64) -> Self {
        Self { gm, ..Self::default() }
    }

    /// φ, ∇φ and the Hessian of φ at spatial point `r`.
    pub fn eval<D: Scalar>(&self, r: &[D; 3]) -> Result<(D, [D; 3], [[D; 3]; 3])> {
        let mut phi = D::from(self.phi0);
        let mut grad = [D::zero(); 3];
        let mut hess = [[D::zero(); 3]; 3];
        for i in 0..3 {
            phi += r[i] * self.gradient[i];
            grad[i] = D::from(self.gradient[i]);
        }
        if self.gm != 0.0 {
            let rho2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
            if !(rho2.re() > 0.0) {
                return Err(Error::Domain("point-mass potential evaluated at its centre".into()));
            }
            let rho = rho2.sqrt();
            let inv3 = (rho2 * rho).recip();
            let inv5 = inv3 / rho2;
            phi -= rho.recip() * self.gm;
            for i in 0..3 {
                grad[i] += r[i] * inv3 * self.gm;
                for j in 0..3 {
                    let delta = if i == j { inv3 } else { D::zero() };
                    hess[i][j] += (delta - r[i] * r[j] * inv5 * 3.0) * self.gm;
                }
            }
        }
        Ok((phi, grad, hess))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricKind {
    Minkowski,
    WeakField { potential: Potential },
    /// Schwarzschild in isotropic Cartesian coordinates.
    Schwarzschild { gm: f64 },
    /// Non-physical test field with rotation-like g^{tx}, g^{ty} and an
    /// oscillating g^{xy}, used to exercise the mode-correlation couplings.
    Vortical { omega: f64, epsilon: f64, k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricField {
    pub kind: MetricKind,
    pub c: f64,
}

static WEAK_FIELD_WARNED: AtomicBool = AtomicBool::new(false);

impl MetricField {
    pub fn minkowski(c: f64) -> Self {
        Self { kind: MetricKind::Minkowski, c }
    }

    pub fn weak_field(potential: Potential, c: f64) -> Self {
        Self { kind: MetricKind::WeakField { potential }, c }
    }

    pub fn schwarzschild_isotropic(gm: f64, c: f64) -> Self {
        Self { kind: MetricKind::Schwarzschild { gm }, c }
    }

    pub fn vortical(omega: f64, epsilon: f64, k: f64, c: f64) -> Self {
        Self { kind: MetricKind::Vortical { omega, epsilon, k }, c }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MetricKind::Minkowski => "minkowski",
            MetricKind::WeakField { .. } => "weak_field",
            MetricKind::Schwarzschild { .. } => "schwarzschild",
            MetricKind::Vortical { .. } => "vortical",
        }
    }

    /// Geometric mass GM/c² of a Schwarzschild background.
    pub fn geometric_mass(&self) -> Option<f64> {
        match self.kind {
            MetricKind::Schwarzschild { gm } => Some(gm / (self.c * self.c)),
            _ => None,
        }
    }

    pub fn eval_f64(&self, x: &[f64; 4]) -> Result<MetricEval<f64>> {
        self.eval(x)
    }

    pub fn eval<D: Scalar>(&self, x: &[D; 4]) -> Result<MetricEval<D>> {
        let c = self.c;
        match self.kind {
            MetricKind::Minkowski => Ok(MetricEval::minkowski(c)),
            MetricKind::WeakField { potential } => weak_field_eval(&potential, c, x),
            MetricKind::Schwarzschild { gm } => schwarzschild_eval(gm / (c * c), c, x),
            MetricKind::Vortical { omega, epsilon, k } => Ok(vortical_eval(omega, epsilon, k, c, x)),
        }
    }
}

/// g^{ab} = diag(F_t(φ), F_s(φ), F_s(φ), F_s(φ)) with
/// F_t = −1/(c² + 2φ) and F_s = c²/(c² − 2φ).
fn weak_field_eval<D: Scalar>(pot: &Potential, c: f64, x: &[D; 4]) -> Result<MetricEval<D>> {
    let (phi, grad, hess) = pot.eval(&[x[1], x[2], x[3]])?;
    let c2 = c * c;
    let ratio = phi.re() / c2;
    if !(ratio.abs() < 0.5) {
        return Err(Error::Domain(format!("weak-field metric degenerate at phi/c^2 = {ratio}")));
    }
    if ratio.abs() > 0.1 && !WEAK_FIELD_WARNED.swap(true, AtomicOrdering::Relaxed) {
        log::warn!("weak-field metric evaluated at |phi|/c^2 = {ratio:.3}, outside the weak-field regime");
    }
    let a = phi * 2.0 + c2;
    let b = -phi * 2.0 + c2;
    // (value, first, second derivative) in φ
    let ft = (-a.recip(), (a * a).recip() * 2.0, -(a * a * a).recip() * 8.0);
    let fs = (b.recip() * c2, (b * b).recip() * (2.0 * c2), (b * b * b).recip() * (8.0 * c2));
    let mut e = MetricEval::zero();
    for (comp, f) in [(0usize, ft), (1, fs), (2, fs), (3, fs)] {
        e.g[comp][comp] = f.0;
        for k in 1..4 {
            e.dg[k][comp][comp] = f.1 * grad[k - 1];
            for l in 1..4 {
                e.ddg[k][l][comp][comp] = f.2 * grad[k - 1] * grad[l - 1] + f.1 * hess[k - 1][l - 1];
            }
        }
    }
    Ok(e)
}

/// Isotropic Schwarzschild with u = M/(2ρ):
/// g^{tt} = −((1+u)/(1−u))²/c², g^{ii} = (1+u)⁻⁴.
fn schwarzschild_eval<D: Scalar>(mass: f64, c: f64, x: &[D; 4]) -> Result<MetricEval<D>> {
    if mass == 0.0 {
        return Ok(MetricEval::minkowski(c));
    }
    let r = [x[1], x[2], x[3]];
    let rho2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let rho = rho2.sqrt();
    if !(rho.re() > 0.5 * mass) {
        return Err(Error::Horizon(format!("isotropic radius {} <= GM/(2c^2) = {}", rho.re(), 0.5 * mass)));
    }
    let u = rho.recip() * (0.5 * mass);
    let one_p = u + 1.0;
    let one_m = -u + 1.0;
    let inv_m = one_m.recip();
    // h(u) and its u-derivatives
    let h = (one_p * inv_m).powi(2);
    let h_u = one_p * inv_m.powi(3) * 4.0;
    let h_uu = (u + 2.0) * inv_m.powi(4) * 8.0;
    // G(u) = (1+u)^-4
    let inv_p = one_p.recip();
    let gs = inv_p.powi(4);
    let gs_u = inv_p.powi(5) * -4.0;
    let gs_uu = inv_p.powi(6) * 20.0;

    let inv_c2 = 1.0 / (c * c);
    let radial = |f: D, f_u: D, f_uu: D| {
        let d1 = -f_u * u / rho;
        let d2 = (f_uu * u * u + f_u * u * 2.0) / rho2;
        (f, d1, d2)
    };
    let tt = radial(-h * inv_c2, -h_u * inv_c2, -h_uu * inv_c2);
    let ss = radial(gs, gs_u, gs_uu);

    let mut e = MetricEval::zero();
    for (comp, (f, d1, d2)) in [(0usize, tt), (1, ss), (2, ss), (3, ss)] {
        e.g[comp][comp] = f;
        for k in 1..4 {
            let nk = r[k - 1] / rho;
            e.dg[k][comp][comp] = d1 * nk;
            for l in 1..4 {
                let nl = r[l - 1] / rho;
                let delta = if k == l { rho.recip() } else { D::zero() };
                e.ddg[k][l][comp][comp] = d2 * nk * nl + d1 * (delta - nk * nl / rho);
            }
        }
    }
    Ok(e)
}

fn vortical_eval<D: Scalar>(omega: f64, epsilon: f64, k: f64, c: f64, x: &[D; 4]) -> MetricEval<D> {
    let mut e = MetricEval::minkowski(c);
    let w = omega / (c * c);
    let (px, py) = (x[1], x[2]);
    e.g[0][1] = -py * w;
    e.g[0][2] = px * w;
    e.dg[2][0][1] = D::from(-w);
    e.dg[1][0][2] = D::from(w);

    let (sx, cx) = ((px * k).sin(), (px * k).cos());
    let (sy, cy) = ((py * k).sin(), (py * k).cos());
    let ek = epsilon * k;
    let ekk = ek * k;
    e.g[1][2] = sx * sy * epsilon;
    e.dg[1][1][2] = cx * sy * ek;
    e.dg[2][1][2] = sx * cy * ek;
    e.ddg[1][1][1][2] = -sx * sy * ekk;
    e.ddg[2][2][1][2] = -sx * sy * ekk;
    e.ddg[1][2][1][2] = cx * cy * ekk;
    e.ddg[2][1][1][2] = cx * cy * ekk;

    // symmetrize the off-diagonal entries
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        e.g[b][a] = e.g[a][b];
        for kk in 0..4 {
            e.dg[kk][b][a] = e.dg[kk][a][b];
            for ll in 0..4 {
                e.ddg[kk][ll][b][a] = e.ddg[kk][ll][a][b];
            }
        }
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Minkowski,
    WeakField,
    Schwarzschild,
    Vortical,
}

fn default_c() -> f64 {
    1.0
}

/// Metric selection as written in configs:
/// `{"metric": "schwarzschild", "params": {"gm": 1.0}, "c": 1.0}`.
///
/// Parameters: `weak_field` takes `phi0`, `gx`, `gy`, `gz`, `gm`;
/// `schwarzschild` takes `gm`; `vortical` takes `omega`, `epsilon`, `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub metric: MetricName,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default = "default_c")]
    pub c: f64,
}

impl MetricConfig {
    pub fn build(&self) -> Result<MetricField> {
        let allowed: &[&str] = match self.metric {
            MetricName::Minkowski => &[],
            MetricName::WeakField => &["phi0", "gx", "gy", "gz", "gm"],
            MetricName::Schwarzschild => &["gm"],
            MetricName::Vortical => &["omega", "epsilon", "k"],
        };
        if let Some(bad) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown parameter {bad:?} for metric {:?}", self.metric)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("speed of light must be positive, got {}", self.c)));
        }
        let p = |k: &str| self.params.get(k).copied().unwrap_or(0.0);
        let need = |k: &str| {
            self.params.get(k).copied().ok_or_else(|| Error::Config(format!("metric {:?} needs parameter {k:?}", self.metric)))
        };
        Ok(match self.metric {
            MetricName::Minkowski => MetricField::minkowski(self.c),
            MetricName::WeakField => MetricField::weak_field(
                Potential { phi0: p("phi0"), gradient: [p("gx"), p("gy"), p("gz")], gm: p("gm") },
                self.c,
            ),
            MetricName::Schwarzschild => {
                let gm = need("gm")?;
                if gm < 0.0 {
                    return Err(Error::Config(format!("gm must be non-negative, got {gm}")));
                }
                MetricField::schwarzschild_isotropic(gm, self.c)
            }
            MetricName::Vortical => MetricField::vortical(need("omega")?, need("epsilon")?, need("k")?, self.c),
        })
    }
}

/// Isotropic radius of the Schwarzschild areal radius `r` for geometric mass `m`.
pub fn isotropic_radius(r: f64, m: f64) -> f64 {
    0.5 * (r - m + (r * (r - 2.0 * m)).sqrt())
}

/// Areal radius of isotropic radius `rho`.
pub fn areal_radius(rho: f64, m: f64) -> f64 {
    rho * (1.0 + m / (2.0 * rho)).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn minkowski_reproduces_the_rest_mass_shell() {
        let c = 3.0;
        let e = MetricField::minkowski(c).eval_f64(&[0.3, 1.0, -2.0, 0.5]).unwrap();
        // E = −p_t with g^{ab}p_a p_b + m²c² = 0 → E²/c² = |p|² + m²c²
        let (m, p) = (2.0, [0.4, -0.3, 1.2]);
        let energy = c * (p.iter().map(|v| v * v).sum::<f64>() + m * m * c * c).sqrt();
        let quad = e.g[0][0] * energy * energy + p.iter().map(|v| v * v).sum::<f64>();
        assert_relative_eq!(quad + m * m * c * c, 0.0, epsilon = 1e-12);
        assert!(e.dg.iter().flatten().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_potential_and_zero_mass_reduce_to_minkowski() {
        let x = [0.0, 3.0, 1.0, -2.0];
        let flat = MetricField::minkowski(1.0).eval_f64(&x).unwrap();
        for m in [MetricField::weak_field(Potential::default(), 1.0), MetricField::schwarzschild_isotropic(0.0, 1.0)] {
            let e = m.eval_f64(&x).unwrap();
            assert_eq!(e.g, flat.g);
        }
        let tiny = MetricField::schwarzschild_isotropic(1e-14, 1.0).eval_f64(&x).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert!((tiny.g[a][b] - flat.g[a][b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_potential_has_no_gradients() {
        let m = MetricField::weak_field(Potential::uniform(-0.01), 1.0);
        let e = m.eval_f64(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(e.dg.iter().flatten().flatten().all(|v| *v == 0.0));
        assert!(e.ddg.iter().flatten().flatten().flatten().all(|v| *v == 0.0));
        assert_relative_eq!(e.g[0][0], -1.0 / 0.98);
    }

    #[test]
    fn horizon_is_rejected() {
        let m = MetricField::schwarzschild_isotropic(2.0, 1.0);
        assert!(matches!(m.eval_f64(&[0.0, 0.9, 0.0, 0.0]), Err(Error::Horizon(_))));
        assert!(m.eval_f64(&[0.0, 1.1, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn radius_conversions_invert() {
        let m = 1.3;
        for r in [2.7, 4.0, 26.0, 1e4] {
            assert_relative_eq!(areal_radius(isotropic_radius(r, m), m), r, max_relative = 1e-14);
        }
    }

    #[test]
    fn config_parsing() {
        let cfg: MetricConfig = serde_json::from_str(r#"{"metric":"schwarzschild","params":{"gm":1.0},"c":1.0}"#).unwrap();
        assert_eq!(cfg.build().unwrap(), MetricField::schwarzschild_isotropic(1.0, 1.0));
        let cfg: MetricConfig = serde_json::from_str(r#"{"metric":"weak_field","params":{"gm":2.0,"gz":0.1}}"#).unwrap();
        let m = cfg.build().unwrap();
        assert_eq!(m.kind, MetricKind::WeakField { potential: Potential { phi0: 0.0, gradient: [0.0, 0.0, 0.1], gm: 2.0 } });
        let bad: MetricConfig = serde_json::from_str(r#"{"metric":"schwarzschild","params":{"mass":1.0}}"#).unwrap();
        assert!(bad.build().unwrap_err().is_config());
        let missing: MetricConfig = serde_json::from_str(r#"{"metric":"vortical","params":{"omega":1.0}}"#).unwrap();
        assert!(missing.build().unwrap_err().is_config());
    }
}
