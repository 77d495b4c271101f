//! Tower-scale constants of the subinvariance argument and the checks
//! relating them.

pub mod tower;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mappings::{GrowthFunction, Tail};
pub use tower::{NamedTower, Sum, TowerValue, ABSORB_GAP, BAND};

/// Inputs of the constants ledger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerInput {
    /// Uniformity constant of the target domain.
    pub a: f64,
    /// Uniformity constant of the subdomain.
    pub c: f64,
    /// Solidity distortion of the map.
    pub psi: GrowthFunction,
    /// Quasisymmetry distortion of the map.
    pub eta: GrowthFunction,
    /// Coarse quasihyperbolic multiplier.
    pub cqh_m: f64,
    /// Coarse quasihyperbolic additive constant.
    pub cqh_c: f64,
    pub rho1: f64,
    pub nu_prime: f64,
    pub h1: f64,
}

impl LedgerInput {
    /// Identity distortions with the given scalars.
    pub fn with_identity_maps(a: f64, c: f64, cqh_m: f64, cqh_c: f64, rho1: f64) -> Self {
        Self {
            a,
            c,
            psi: GrowthFunction::identity(),
            eta: GrowthFunction::identity(),
            cqh_m,
            cqh_c,
            rho1,
            nu_prime: 2.0,
            h1: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("c", self.c), ("cqh_m", self.cqh_m), ("rho1", self.rho1), ("nu_prime", self.nu_prime)] {
            if !(v >= 1.0 && v.is_finite()) {
                return Err(Error::InvalidConstant(format!("{name} must be a finite value >= 1, got {v}")));
            }
        }
        for (name, v) in [("cqh_c", self.cqh_c), ("h1", self.h1)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConstant(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        self.psi.check_phi().map_err(|e| Error::InvalidConstant(format!("psi: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ledger {
    pub a_prime: f64,
    pub c_prime: f64,
    pub vartheta: f64,
    pub b1: TowerValue,
    pub b2: TowerValue,
    pub b3: TowerValue,
    pub vartheta1: TowerValue,
    pub tau: TowerValue,
    /// Infinite when the additive constant vanishes.
    pub b4: TowerValue,
    /// A term below the absorption gap was dropped.
    pub absorbed: bool,
}

impl Ledger {
    pub fn members(&self) -> Vec<NamedTower> {
        let plain = |x: f64| TowerValue::from_f64(x).expect("validated");
        vec![
            NamedTower::new("a_prime", &plain(self.a_prime)),
            NamedTower::new("c_prime", &plain(self.c_prime)),
            NamedTower::new("vartheta", &plain(self.vartheta)),
            NamedTower::new("b1", &self.b1),
            NamedTower::new("b2", &self.b2),
            NamedTower::new("b3", &self.b3),
            NamedTower::new("vartheta1", &self.vartheta1),
            NamedTower::new("tau", &self.tau),
            NamedTower::new("b4", &self.b4),
        ]
    }
}

/// Growth function at a tower argument, using its tail past the last knot.
/// The flag reports a dropped affine offset.
pub fn growth_at(g: &GrowthFunction, t: &TowerValue) -> Result<(TowerValue, bool)> {
    let (tt, yt) = g.last_knot();
    if let Some(x) = t.to_f64() {
        let y = g.eval(x);
        if y.is_finite() && y <= BAND.exp() {
            return Ok((TowerValue::from_f64(y)?, false));
        }
    }
    match g.tail() {
        // Beyond level 0 the offset y_T - slope T is below the absorption gap.
        Tail::Affine { slope } => Ok((t.mul_f64(slope)?, yt != slope * tt)),
        Tail::Power { exponent } => {
            Ok((t.powf(exponent)?.mul(&TowerValue::from_ln(yt.ln() - exponent * tt.ln())?), false))
        }
    }
}

/// `1 / g^{-1}(1 / big)` without forming the tiny reciprocal.
pub fn inverse_at_reciprocal(g: &GrowthFunction, big: &TowerValue) -> Result<TowerValue> {
    if let Some(x) = big.to_f64() {
        let r = 1.0 / x;
        if r.is_normal() {
            return TowerValue::from_f64(1.0 / g.inverse(r)?);
        }
    }
    // Below the first knot g is linear through the origin.
    let (t1, y1) = g.knots()[1];
    big.mul_f64(y1 / t1)
}

pub fn compute_ledger(input: &LedgerInput) -> Result<Ledger> {
    input.validate()?;
    let LedgerInput { a, c, ref psi, ref eta, cqh_m: m, cqh_c: cc, rho1, .. } = *input;
    let a_prime = 7.0 * a.powi(3);
    let c_prime = 7.0 * c.powi(3);
    let acm = a_prime * c_prime * cc * m;
    let eta_inv = |y: f64| eta.inverse(y);
    let vartheta = (0.5 * eta_inv(1.0 / rho1)?).min(1.0 / (2.0 * rho1));

    let e1 = 8.0 * acm * rho1 * eta.eval(rho1) * psi.eval(1.0);
    let lead = (1.0 / psi.inverse(0.125)?).max(1.0);
    let b1 = TowerValue::from_ln(e1 * 4f64.ln())?.mul_f64(lead)?;

    let eta_vartheta = eta_inv(vartheta)?;
    let b2 = b1.pow(&TowerValue::from_f64(8.0 * acm)?)?.mul_f64(1.0 / eta_vartheta)?;

    let inner = b2.powf(2.0)?.mul_f64(5.0 * acm)?;
    let b3 = inner.exp().mul_f64(2.0)?;

    let b3_cubed = b3.powf(3.0)?;
    let recip = inverse_at_reciprocal(eta, &b3_cubed)?;
    let vartheta1 = b3.powf(4.0)?.mul_f64(5.0 * a_prime * c_prime * m * m)?.mul(&recip);
    let tau = recip.mul_f64(2.0)?;

    let mut absorbed = false;
    let b4 = if cc == 0.0 {
        TowerValue::INFINITY
    } else {
        let arg = b3.powf(2.0)?.mul_f64(13.0)?;
        let (eta_big, dropped) = growth_at(eta, &arg)?;
        absorbed |= dropped;
        vartheta1.exp().mul(&eta_big.powf(3.0 * a_prime * m)?).div_f64(2.0 * acm * eta_vartheta)?
    };

    Ok(Ledger { a_prime, c_prime, vartheta, b1, b2, b3, vartheta1, tau, b4, absorbed })
}

/// One strict inequality `lhs > rhs` evaluated in tower arithmetic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub holds: bool,
    pub lhs: NamedTower,
    pub rhs: NamedTower,
    pub level_gap: i64,
    /// Difference of the top-level mantissas when the levels agree.
    pub mantissa_gap: Option<f64>,
}

fn verdict(name: &str, lhs: TowerValue, rhs: TowerValue) -> Verdict {
    let same = lhs.level() == rhs.level() && !lhs.is_infinite() && !rhs.is_infinite();
    Verdict {
        name: name.to_string(),
        holds: lhs > rhs,
        lhs: NamedTower::new(name, &lhs),
        rhs: NamedTower::new(name, &rhs),
        level_gap: lhs.level() as i64 - rhs.level() as i64,
        mantissa_gap: same.then(|| lhs.mantissa() - rhs.mantissa()),
    }
}

/// The three inequalities between consecutive ledger constants.
pub fn verify_chain(ledger: &Ledger, input: &LedgerInput) -> Result<[Verdict; 3]> {
    let (ap, cp, m, cc, rho1) = (ledger.a_prime, ledger.c_prime, input.cqh_m, input.cqh_c, input.rho1);
    let acm = ap * cp * cc * m;
    let rhs1 = TowerValue::from_ln(4f64.ln() * (8.0 * acm).powi(2) * rho1)?;

    let base2 = ledger.b2.mul_f64(4.0 * ap * cp * m * m)?;
    let exp2 = ledger.b2.mul_f64(6.0 * acm * m)?.plus(&TowerValue::from_f64(2.0)?);
    let rhs2 = base2.pow(&exp2)?;

    let b3_sq = ledger.b3.powf(2.0)?;
    let exp3 = ledger.tau.mul_f64(8.0 * ap * cp * m * m)?.plus(&TowerValue::from_f64(2.0)?);
    let rhs3 = b3_sq.mul_f64(24.0)?.max(b3_sq.mul_f64(7.0)?.pow(&exp3)?);

    Ok([verdict("b2", ledger.b2, rhs1), verdict("b3", ledger.b3, rhs2), verdict("b4", ledger.b4, rhs3)])
}

/// Uniformity constant of the image subdomain from the cone and turning
/// constants of the argument: `max(2 b3^2, b4)`.
pub fn c_prime_bound(input: &LedgerInput) -> Result<TowerValue> {
    let l = compute_ledger(input)?;
    Ok(l.b3.powf(2.0)?.mul_f64(2.0)?.max(l.b4))
}
