//! Physical parameters, rotor constants and the bare / cavity-modified
//! angular potentials.
//!
//! Public quantities are in SI-like units: energies in joules, rates and
//! detunings in rad/s. Everything downstream of [`RotorConstants`] works in
//! rotor units where the energy unit is `ħ²/I`, the time unit is `I/ħ` and
//! `ħ = I = 1`.

use crate::error::{Result, RotorError};

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Microscopic parameters of the condensate and the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Total atom number `N`.
    pub atom_number: u64,
    /// Spin coupling `c2` (J). Positive for an antiferromagnetic gas.
    pub c2: f64,
    /// Quadratic Zeeman shift `q` (J).
    pub q: f64,
    /// Dispersive atom-photon coupling `U0` (rad/s).
    pub u0: f64,
    /// Cavity field decay rate `κ` (rad/s).
    pub kappa: f64,
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// When false the `sin²(2θ)` term of the rotor potential is dropped.
    pub chi2_enabled: bool,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(RotorError::InvalidParameter(msg.to_string()));
        if self.atom_number < 1 {
            return bad("atom number must be at least 1");
        }
        if !(self.c2 > 0.0) {
            return bad("c2 must be positive (antiferromagnetic)");
        }
        if !(self.q >= 0.0) || !self.q.is_finite() {
            return bad("q must be finite and non-negative");
        }
        if !(self.kappa > 0.0) {
            return bad("kappa must be positive");
        }
        if !(self.u0 >= 0.0) || !self.u0.is_finite() {
            return bad("U0 must be finite and non-negative");
        }
        if !(self.hbar > 0.0) {
            return bad("hbar must be positive");
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        self.atom_number as f64
    }

    /// Copy with a different atom number, as used for shot-to-shot sampling.
    pub fn with_atom_number(&self, atom_number: u64) -> Self {
        Self {
            atom_number,
            ..*self
        }
    }
}

/// Derived rotor constants and the rotor unit system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorConstants {
    pub chi1: f64,
    pub chi2: f64,
    /// Moment of inertia `I = N ħ² / c2` (J·s²).
    pub inertia: f64,
    /// Dimensionless potential strength `q I / ħ² = q N / c2`.
    pub beta: f64,
    /// Time unit `I / ħ` (s).
    pub t0: f64,
    /// Energy unit `ħ² / I` (J).
    pub e0: f64,
}

impl RotorConstants {
    pub fn to_dimensionless_time(&self, seconds: f64) -> f64 {
        seconds / self.t0
    }

    pub fn to_seconds(&self, time: f64) -> f64 {
        time * self.t0
    }

    /// Angular frequency in rad/s to rotor units.
    pub fn to_dimensionless_rate(&self, omega: f64) -> f64 {
        omega * self.t0
    }
}

/// Instantaneous cavity drive: pump rate `η` and detuning `Δ = ω_c − ω_l`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DrivePoint {
    /// Pump rate (rad/s), non-negative.
    pub eta: f64,
    /// Cavity detuning (rad/s), signed.
    pub delta: f64,
}

impl DrivePoint {
    pub fn new(eta: f64, delta: f64) -> Self {
        Self { eta, delta }
    }

    pub fn off() -> Self {
        Self::default()
    }

    pub fn lerp(&self, other: &DrivePoint, s: f64) -> DrivePoint {
        DrivePoint {
            eta: self.eta + (other.eta - self.eta) * s,
            delta: self.delta + (other.delta - self.delta) * s,
        }
    }
}

pub fn derive_constants(params: &SystemParams) -> Result<RotorConstants> {
    params.validate()?;
    let n = params.n();
    let chi1 = n + 1.5;
    let chi2 = if params.chi2_enabled {
        params.q * n / (8.0 * params.c2)
    } else {
        0.0
    };
    let inertia = n * params.hbar * params.hbar / params.c2;
    let beta = params.q * n / params.c2;
    let t0 = inertia / params.hbar;
    let e0 = params.hbar * params.hbar / inertia;
    Ok(RotorConstants {
        chi1,
        chi2,
        inertia,
        beta,
        t0,
        e0,
    })
}

/// `V(θ) = χ1 sin²θ + χ2 sin²(2θ)`.
pub fn bare_potential(theta: f64, constants: &RotorConstants) -> f64 {
    let s1 = theta.sin();
    let s2 = (2.0 * theta).sin();
    constants.chi1 * s1 * s1 + constants.chi2 * s2 * s2
}

pub fn bare_potential_derivative(theta: f64, constants: &RotorConstants) -> f64 {
    constants.chi1 * (2.0 * theta).sin() + 2.0 * constants.chi2 * (4.0 * theta).sin()
}

pub fn bare_potential_second_derivative(theta: f64, constants: &RotorConstants) -> f64 {
    2.0 * constants.chi1 * (2.0 * theta).cos() + 8.0 * constants.chi2 * (4.0 * theta).cos()
}

/// Largest value of the bare potential over the period.
pub fn bare_potential_max(constants: &RotorConstants) -> f64 {
    // V = χ1 s + 4 χ2 s (1 - s) with s = sin²θ ∈ [0, 1]
    let (c1, c2) = (constants.chi1, constants.chi2);
    let at_one = c1;
    if c2 <= 0.0 {
        return at_one.max(0.0);
    }
    let s_star = (c1 + 4.0 * c2) / (8.0 * c2);
    if (0.0..1.0).contains(&s_star) {
        let v = c1 * s_star + 4.0 * c2 * s_star * (1.0 - s_star);
        v.max(at_one)
    } else {
        at_one.max(0.0)
    }
}

/// The cavity-modified potential for one drive setting, with the
/// prefactors evaluated once.
#[derive(Debug, Clone, Copy)]
pub struct EffectivePotential {
    constants: RotorConstants,
    /// `2ħη²/(qκ)`
    weight: f64,
    /// `2Δ/κ`
    offset: f64,
    /// `2U0/κ`
    slope: f64,
}

impl EffectivePotential {
    pub fn new(
        constants: &RotorConstants,
        params: &SystemParams,
        drive: DrivePoint,
    ) -> Result<Self> {
        if params.q == 0.0 {
            return Err(RotorError::ZeroZeeman);
        }
        Ok(Self {
            constants: *constants,
            weight: 2.0 * params.hbar * drive.eta * drive.eta / (params.q * params.kappa),
            offset: 2.0 * drive.delta / params.kappa,
            slope: 2.0 * params.u0 / params.kappa,
        })
    }

    /// Prefactor of the arctan term, `2ħη²/(qκ)`.
    pub fn cavity_weight(&self) -> f64 {
        self.weight
    }

    /// Arctan argument for a given bare potential value.
    pub fn argument(&self, v: f64) -> f64 {
        self.offset + self.slope * v
    }

    /// The cavity term as a function of the bare potential value, without
    /// the weight.
    pub fn cavity_shape(&self, v: f64) -> f64 {
        self.argument(v).atan()
    }

    pub fn value(&self, theta: f64) -> f64 {
        let v = bare_potential(theta, &self.constants);
        v + self.weight * self.cavity_shape(v)
    }

    /// Value with the cavity term scaled by an intensity factor.
    pub fn value_with_intensity(&self, theta: f64, intensity: f64) -> f64 {
        let v = bare_potential(theta, &self.constants);
        v + intensity * self.weight * self.cavity_shape(v)
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        let v = bare_potential(theta, &self.constants);
        let dv = bare_potential_derivative(theta, &self.constants);
        let x = self.argument(v);
        dv * (1.0 + self.weight * self.slope / (1.0 + x * x))
    }

    pub fn second_derivative(&self, theta: f64) -> f64 {
        let v = bare_potential(theta, &self.constants);
        let dv = bare_potential_derivative(theta, &self.constants);
        let d2v = bare_potential_second_derivative(theta, &self.constants);
        let x = self.argument(v);
        let lor = 1.0 / (1.0 + x * x);
        d2v * (1.0 + self.weight * self.slope * lor)
            - self.weight * self.slope * self.slope * dv * dv * 2.0 * x * lor * lor
    }
}

/// `V_eff(θ) = V(θ) + (2ħη²/(qκ)) atan((2Δ + 2U0 V(θ))/κ)`.
pub fn effective_potential(
    theta: f64,
    constants: &RotorConstants,
    drive: DrivePoint,
    params: &SystemParams,
) -> Result<f64> {
    if drive.eta == 0.0 {
        return Ok(bare_potential(theta, constants));
    }
    Ok(EffectivePotential::new(constants, params, drive)?.value(theta))
}

/// Enhancement factor of the potential in the far-detuned limit, obtained by
/// linearising the arctan around `2Δ/κ`:
/// `1 + (ħU0/q) η² / (κ²/4 + Δ²)`.
///
/// In units where `ħU0 = 2q` this is the familiar `1 + 2η²/(κ²/4 + Δ²)`.
pub fn far_detuned_scale(drive: DrivePoint, params: &SystemParams) -> f64 {
    if drive.eta == 0.0 {
        return 1.0;
    }
    let lorentz = params.kappa * params.kappa / 4.0 + drive.delta * drive.delta;
    1.0 + params.hbar * params.u0 / params.q * drive.eta * drive.eta / lorentz
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// The cavity only rescales the bare potential.
    Scaling,
    /// The cavity reshapes the potential.
    Distorting,
    Intermediate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds {
    /// `|Δ| ≥ factor · U0 · V_max` counts as far detuned.
    pub scaling_factor: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            scaling_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    /// `U0 N / κ`
    pub depth_ratio: f64,
    /// Whether the arctan argument range straddles zero.
    pub resonance_overlap: bool,
    pub classification: Regime,
}

pub fn classify_regime(
    drive: DrivePoint,
    constants: &RotorConstants,
    params: &SystemParams,
    thresholds: RegimeThresholds,
) -> RegimeReport {
    let depth_ratio = params.u0 * params.n() / params.kappa;
    let v_max = bare_potential_max(constants);
    let lo = 2.0 * drive.delta / params.kappa;
    let hi = (2.0 * drive.delta + 2.0 * params.u0 * v_max) / params.kappa;
    let resonance_overlap = lo.min(hi) <= 0.0 && lo.max(hi) >= 0.0;
    let classification = if drive.delta.abs() >= thresholds.scaling_factor * params.u0 * v_max {
        Regime::Scaling
    } else if depth_ratio > 1.0 && resonance_overlap {
        Regime::Distorting
    } else {
        Regime::Intermediate
    };
    RegimeReport {
        depth_ratio,
        resonance_overlap,
        classification,
    }
}

/// Coherent steady-state photon number `|α_s|² = η² / (κ²/4 + (Δ + U0⟨V⟩)²)`.
pub fn steady_photon_number(mean_v: f64, drive: DrivePoint, params: &SystemParams) -> f64 {
    let shifted = drive.delta + params.u0 * mean_v;
    drive.eta * drive.eta / (params.kappa * params.kappa / 4.0 + shifted * shifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn unit_params() -> SystemParams {
        SystemParams {
            atom_number: 8,
            c2: 2.0,
            q: 4.0,
            u0: 1.0,
            kappa: 1.0,
            hbar: 1.0,
            chi2_enabled: true,
        }
    }

    fn with_chis(chi1: f64, chi2: f64) -> RotorConstants {
        RotorConstants {
            chi1,
            chi2,
            inertia: 1.0,
            beta: 1.0,
            t0: 1.0,
            e0: 1.0,
        }
    }

    #[test]
    fn constants_follow_definitions() {
        let c = derive_constants(&unit_params()).unwrap();
        assert_eq!(c.chi1, 9.5);
        assert_eq!(c.chi2, 2.0);
        assert_eq!(c.inertia, 4.0);
        assert_eq!(c.beta, 16.0);
        assert!((c.e0 * c.t0 - 1.0).abs() < 1e-15);

        let mut p = unit_params();
        p.atom_number = 10_000;
        assert_eq!(derive_constants(&p).unwrap().chi1, 10_001.5);
    }

    #[test]
    fn zero_field_has_no_chi2() {
        let mut p = unit_params();
        p.q = 0.0;
        let c = derive_constants(&p).unwrap();
        assert_eq!(c.chi2, 0.0);
        assert_eq!(c.beta, 0.0);
        assert_eq!(
            effective_potential(0.3, &c, DrivePoint::new(1.0, 0.0), &p),
            Err(RotorError::ZeroZeeman)
        );
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = unit_params();
        p.c2 = 0.0;
        assert!(derive_constants(&p).is_err());
        let mut p = unit_params();
        p.q = -1.0;
        assert!(derive_constants(&p).is_err());
        let mut p = unit_params();
        p.atom_number = 0;
        assert!(derive_constants(&p).is_err());
    }

    #[test]
    fn bare_potential_values() {
        assert_eq!(bare_potential(0.0, &with_chis(3.0, 5.0)), 0.0);
        assert!((bare_potential(FRAC_PI_2, &with_chis(1.0, 1.0)) - 1.0).abs() < 1e-15);
        assert!((bare_potential(FRAC_PI_4, &with_chis(2.0, 3.0)) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn bare_max_matches_scan() {
        for &(c1, c2) in &[(1.0, 0.0), (1.0, 1.0), (2.0, 3.0), (10.0, 0.01)] {
            let c = with_chis(c1, c2);
            let scan = (0..20_000)
                .map(|i| bare_potential(i as f64 * PI / 20_000.0, &c))
                .fold(f64::MIN, f64::max);
            assert!((bare_potential_max(&c) - scan).abs() < 1e-6 * scan.max(1.0));
        }
    }

    #[test]
    fn drive_off_is_bare() {
        let p = unit_params();
        let c = derive_constants(&p).unwrap();
        for i in 0..50 {
            let th = -1.5 + 0.06 * i as f64;
            assert_eq!(
                effective_potential(th, &c, DrivePoint::new(0.0, 0.7), &p).unwrap(),
                bare_potential(th, &c)
            );
        }
    }

    #[test]
    fn uncoupled_cavity_only_shifts() {
        let mut p = unit_params();
        p.u0 = 0.0;
        let c = derive_constants(&p).unwrap();
        let drive = DrivePoint::new(1.3, -0.4);
        let ev = EffectivePotential::new(&c, &p, drive).unwrap();
        let shift = ev.value(0.0) - bare_potential(0.0, &c);
        for i in 0..50 {
            let th = -1.5 + 0.06 * i as f64;
            assert!((ev.value(th) - bare_potential(th, &c) - shift).abs() < 1e-12);
            assert!((ev.derivative(th) - bare_potential_derivative(th, &c)).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let p = unit_params();
        let c = derive_constants(&p).unwrap();
        let ev = EffectivePotential::new(&c, &p, DrivePoint::new(0.8, -3.0)).unwrap();
        let h = 1e-5;
        for i in 0..40 {
            let th = -1.4 + 0.07 * i as f64;
            let fd1 = (ev.value(th + h) - ev.value(th - h)) / (2.0 * h);
            let fd2 = (ev.value(th + h) - 2.0 * ev.value(th) + ev.value(th - h)) / (h * h);
            assert!((fd1 - ev.derivative(th)).abs() < 1e-6 * (1.0 + fd1.abs()));
            assert!((fd2 - ev.second_derivative(th)).abs() < 1e-3 * (1.0 + fd2.abs()));
        }
    }

    #[test]
    fn far_detuned_scale_examples() {
        let p = unit_params();
        assert_eq!(far_detuned_scale(DrivePoint::new(0.0, 3.0), &p), 1.0);
        // ħU0 = 2q reduces the factor to 1 + 2η²/(κ²/4 + Δ²)
        let p = SystemParams {
            q: 0.5,
            u0: 1.0,
            hbar: 1.0,
            kappa: 2.0,
            ..unit_params()
        };
        let s = far_detuned_scale(DrivePoint::new(p.kappa / 2.0, 0.0), &p);
        assert!((s - 3.0).abs() < 1e-14);
    }

    #[test]
    fn regime_examples() {
        let mut p = unit_params();
        p.atom_number = 1000;
        p.kappa = 1.0;
        p.u0 = 20.0 / 1000.0;
        let c = derive_constants(&p).unwrap();
        let vmax = bare_potential_max(&c);
        let t = RegimeThresholds::default();

        let mid = classify_regime(DrivePoint::new(1.0, -p.u0 * vmax / 2.0), &c, &p, t);
        assert_eq!(mid.classification, Regime::Distorting);
        assert!((mid.depth_ratio - 20.0).abs() < 1e-12);

        let far = classify_regime(DrivePoint::new(1.0, 100.0 * p.u0 * p.n()), &c, &p, t);
        assert_eq!(far.classification, Regime::Scaling);

        let res = classify_regime(DrivePoint::new(1.0, 0.0), &c, &p, t);
        assert_eq!(res.classification, Regime::Distorting);
        assert!(res.resonance_overlap);

        let weak = SystemParams {
            u0: 0.5 / 1000.0,
            ..p
        };
        let r = classify_regime(DrivePoint::new(1.0, 0.0), &c, &weak, t);
        assert_eq!(r.classification, Regime::Intermediate);
    }

    #[test]
    fn photon_number_examples() {
        let p = unit_params();
        assert_eq!(
            steady_photon_number(3.0, DrivePoint::new(0.0, 1.0), &p),
            0.0
        );
        let eta = 0.7;
        let mean_v = 2.5;
        let n = steady_photon_number(mean_v, DrivePoint::new(eta, -p.u0 * mean_v), &p);
        assert!((n - 4.0 * eta * eta / (p.kappa * p.kappa)).abs() < 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn potentials_are_pi_periodic_and_even(
                theta in -10.0f64..10.0,
                chi1 in 0.0f64..50.0,
                chi2 in 0.0f64..5.0,
                eta in 0.0f64..3.0,
                delta in -40.0f64..40.0,
            ) {
                let c = with_chis(chi1, chi2);
                let p = SystemParams { u0: 0.3, kappa: 1.5, q: 0.7, ..unit_params() };
                let ev = EffectivePotential::new(&c, &p, DrivePoint::new(eta, delta)).unwrap();
                let scale = 1.0 + chi1 + chi2 + ev.cavity_weight();
                for f in [|th: f64, c: &RotorConstants, _: &EffectivePotential| bare_potential(th, c),
                          |th: f64, _: &RotorConstants, e: &EffectivePotential| e.value(th)] {
                    prop_assert!((f(theta, &c, &ev) - f(theta + PI, &c, &ev)).abs() < 1e-12 * scale);
                    prop_assert!((f(theta, &c, &ev) - f(-theta, &c, &ev)).abs() < 1e-12 * scale);
                }
            }

            #[test]
            fn cavity_term_is_bounded(
                theta in -4.0f64..4.0,
                eta in 0.0f64..3.0,
                delta in -40.0f64..40.0,
            ) {
                let p = unit_params();
                let c = derive_constants(&p).unwrap();
                let drive = DrivePoint::new(eta, delta);
                let bound = 2.0 * p.hbar * eta * eta / (p.q * p.kappa) * std::f64::consts::FRAC_PI_2;
                let diff = effective_potential(theta, &c, drive, &p).unwrap() - bare_potential(theta, &c);
                prop_assert!(diff.abs() <= bound * (1.0 + 1e-12));
            }

            #[test]
            fn beta_times_energy_unit_is_q(
                n in 1u64..100_000,
                c2 in 1e-3f64..1e3,
                q in 1e-3f64..1e3,
                hbar in 0.1f64..10.0,
            ) {
                let p = SystemParams { atom_number: n, c2, q, hbar, ..unit_params() };
                let c = derive_constants(&p).unwrap();
                prop_assert!((c.beta * c.e0 - q).abs() <= 1e-14 * q * 4.0);
            }
        }
    }
}
