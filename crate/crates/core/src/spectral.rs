//! Physical constants, spectra of the received light and the junction
//! responsivities that turn those spectra into photovoltaic currents.
//!
//! All quantities are SI: wavelengths in metres, powers in watts, currents in
//! amperes. Spectral lines (the energy lasers and the information carrier)
//! are Dirac deltas and are added analytically; only the black-body ambient
//! term is integrated numerically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadTolerance};

/// Stefan–Boltzmann constant (W m⁻² K⁻⁴), used by the sanity checks.
pub const STEFAN_BOLTZMANN: f64 = 5.670_374_419e-8;
/// Wien displacement constant (m K).
pub const WIEN_DISPLACEMENT: f64 = 2.897_771_955e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Speed of light (m/s).
    pub c: f64,
    /// Planck constant (J s).
    pub planck: f64,
    /// Boltzmann constant (J/K).
    pub boltzmann: f64,
    /// Elementary charge (C).
    pub elementary_charge: f64,
    /// Black-body temperature of the sun (K).
    pub t_sun: f64,
    /// Solid angle of the Earth seen from the sun (sr).
    pub alpha_se: f64,
    /// Sun surface area (m²).
    pub sun_area: f64,
    /// Earth surface area (m²).
    pub earth_area: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            c: 299_792_458.0,
            planck: 6.626_070_15e-34,
            boltzmann: 1.380_649e-23,
            elementary_charge: 1.602_176_634e-19,
            t_sun: 5778.0,
            alpha_se: 5.72e-9,
            sun_area: 6.07e12 * 1e6,
            earth_area: 5.1e8 * 1e6,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.c,
            self.planck,
            self.boltzmann,
            self.elementary_charge,
            self.t_sun,
            self.alpha_se,
            self.sun_area,
            self.earth_area,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::Config("physical constants must be positive".into()))
        }
    }

    /// Equivalent size of the cell seen by sunlight, ν_s = α_SE A_S A_P / A_E
    /// (sr m²).
    pub fn nu_s(&self, cell_area: f64) -> f64 {
        self.alpha_se * self.sun_area * cell_area / self.earth_area
    }

    /// k_b T / q₀.
    pub fn thermal_voltage(&self, temperature: f64) -> f64 {
        self.boltzmann * temperature / self.elementary_charge
    }

    /// q₀ / (k_p c), the responsivity per metre of wavelength at unit efficiency.
    pub fn quantum_responsivity(&self) -> f64 {
        self.elementary_charge / (self.planck * self.c)
    }
}

/// Black-body spectral radiance 2 k_p c² λ⁻⁵ / (exp(k_p c / (k_b T λ)) − 1).
pub fn planck_radiance(wavelength: f64, temperature: f64, k: &PhysicalConstants) -> Result<f64> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::Domain(format!("wavelength {wavelength:e} m")));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Domain(format!("temperature {temperature:e} K")));
    }
    let x = k.planck * k.c / (k.boltzmann * temperature * wavelength);
    let prefactor = 2.0 * k.planck * k.c * k.c / wavelength.powi(5);
    // For large x, exp(x) overflows long before the ratio underflows.
    let value = if x > 30.0 {
        let e = (-x).exp();
        prefactor * e / (-(-x).exp_m1())
    } else {
        prefactor / x.exp_m1()
    };
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBand {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl SpectralBand {
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self> {
        let band = SpectralBand {
            lambda_min,
            lambda_max,
        };
        band.validate()?;
        Ok(band)
    }

    pub fn from_nm(min_nm: f64, max_nm: f64) -> Result<Self> {
        Self::new(min_nm * 1e-9, max_nm * 1e-9)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_min > 0.0
            && self.lambda_min < self.lambda_max
            && self.lambda_max.is_finite()
        {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "band [{:e}, {:e}] m must satisfy 0 < min < max",
                self.lambda_min, self.lambda_max
            )))
        }
    }

    pub fn contains(&self, wavelength: f64) -> bool {
        wavelength >= self.lambda_min && wavelength <= self.lambda_max
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lambda_min + self.lambda_max)
    }
}

/// One p-n junction of the stack: passband, efficiency and the two-diode
/// equivalent circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionSpec {
    pub band: SpectralBand,
    /// Dimensionless conversion efficiency η inside the band.
    pub eta: f64,
    /// Saturation current of the diffusion diode (ideality 1), A.
    pub i_sat1: f64,
    /// Saturation current of the recombination diode (ideality 2), A.
    pub i_sat2: f64,
    /// Shunt resistance, Ω. `f64::INFINITY` disables the shunt.
    pub r_sh: f64,
    /// Series resistance, Ω.
    pub r_s: f64,
}

impl JunctionSpec {
    /// Junction with the circuit elements of the reference receiver:
    /// I₁ = I₂ = 1 nA, R_sh = 100 MΩ, R_s = 100 Ω, η = 0.7.
    pub fn reference(band: SpectralBand) -> Self {
        JunctionSpec {
            band,
            eta: 0.7,
            i_sat1: 1e-9,
            i_sat2: 1e-9,
            r_sh: 100e6,
            r_s: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.band.validate()?;
        let positive = |v: f64| v > 0.0 && !v.is_nan();
        if !(positive(self.i_sat1) && self.i_sat1.is_finite())
            || !(positive(self.i_sat2) && self.i_sat2.is_finite())
        {
            return Err(Error::Config("saturation currents must be positive".into()));
        }
        if !positive(self.r_sh) || !(positive(self.r_s) && self.r_s.is_finite()) {
            return Err(Error::Config("junction resistances must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(format!("efficiency {} not in (0, 1]", self.eta)));
        }
        Ok(())
    }
}

/// Passbands of the reference receivers, in nm.
pub fn reference_bands_nm(junctions: usize) -> Result<Vec<(f64, f64)>> {
    match junctions {
        1 => Ok(vec![(400.0, 700.0)]),
        4 => Ok(vec![
            (400.0, 650.0),
            (650.0, 900.0),
            (900.0, 1100.0),
            (1100.0, 1800.0),
        ]),
        n => Err(Error::Config(format!(
            "no reference band layout for N = {n}; give the bands explicitly"
        ))),
    }
}

/// Upper band edge used for the single-junction receiver so that the 980 nm
/// information carrier is absorbed.
pub const SINGLE_JUNCTION_EXTENDED_MAX_NM: f64 = 1000.0;

/// Full electrical and optical description of the N-junction receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverSpec {
    pub junctions: Vec<JunctionSpec>,
    /// EH load R_L, Ω.
    pub r_load: f64,
    /// Information load R_d, Ω.
    pub r_info: f64,
    /// High-pass capacitance C_d, F.
    pub c_info: f64,
    /// Low-pass inductance L, H.
    pub inductance: f64,
    /// Thermal voltage V_T, V.
    pub v_t: f64,
    /// Cell area A_P, m².
    pub cell_area: f64,
    /// Zero-based index of the junction that absorbs the information carrier.
    pub info_junction: usize,
    /// Explicit r(λ₀) in A/W; bypasses the band lookup when set.
    pub info_responsivity_override: Option<f64>,
    pub constants: PhysicalConstants,
}

/// Cell temperature behind the default thermal voltage.
pub const DEFAULT_CELL_TEMPERATURE: f64 = 300.0;

impl ReceiverSpec {
    /// Receiver with the reference circuit elements on the given bands.
    pub fn from_bands(bands: &[SpectralBand]) -> Result<Self> {
        let constants = PhysicalConstants::default();
        let rx = ReceiverSpec {
            junctions: bands.iter().copied().map(JunctionSpec::reference).collect(),
            r_load: 10e3,
            r_info: 10e3,
            c_info: 2.5e-6,
            inductance: 10e-3,
            v_t: constants.thermal_voltage(DEFAULT_CELL_TEMPERATURE),
            cell_area: 1e-4,
            info_junction: 0,
            info_responsivity_override: None,
            constants,
        };
        rx.validate()?;
        Ok(rx)
    }

    /// Reference single-junction receiver. The passband is 400–1000 nm
    /// rather than 400–700 nm so that λ₀ = 980 nm reaches the junction; see
    /// [`ReceiverSpec::deviations`].
    pub fn single_junction() -> Self {
        let band = SpectralBand::from_nm(400.0, SINGLE_JUNCTION_EXTENDED_MAX_NM)
            .expect("static band");
        Self::from_bands(&[band]).expect("static receiver")
    }

    /// Reference four-junction receiver; λ₀ = 980 nm falls in junction 3.
    pub fn four_junction() -> Self {
        let bands: Vec<_> = reference_bands_nm(4)
            .expect("static bands")
            .into_iter()
            .map(|(lo, hi)| SpectralBand::from_nm(lo, hi).expect("static band"))
            .collect();
        let mut rx = Self::from_bands(&bands).expect("static receiver");
        rx.info_junction = 2;
        rx
    }

    /// Reference receiver for N ∈ {1, 4}.
    pub fn reference(junctions: usize) -> Result<Self> {
        match junctions {
            1 => Ok(Self::single_junction()),
            4 => Ok(Self::four_junction()),
            n => Err(Error::Config(format!("no reference receiver for N = {n}"))),
        }
    }

    pub fn n(&self) -> usize {
        self.junctions.len()
    }

    /// R_Σ = Σ R_s + R_L.
    pub fn r_sigma(&self) -> f64 {
        self.junctions.iter().map(|j| j.r_s).sum::<f64>() + self.r_load
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        if self.junctions.is_empty() {
            return Err(Error::Config("receiver needs at least one junction".into()));
        }
        for j in &self.junctions {
            j.validate()?;
        }
        let mut bands: Vec<_> = self.junctions.iter().map(|j| j.band).collect();
        bands.sort_by(|a, b| a.lambda_min.total_cmp(&b.lambda_min));
        for pair in bands.windows(2) {
            if pair[0].lambda_max > pair[1].lambda_min {
                return Err(Error::Config(format!(
                    "junction passbands overlap: [{:e}, {:e}] and [{:e}, {:e}]",
                    pair[0].lambda_min, pair[0].lambda_max, pair[1].lambda_min, pair[1].lambda_max
                )));
            }
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.r_load)
            && positive(self.r_info)
            && positive(self.c_info)
            && positive(self.inductance)
            && positive(self.v_t)
            && positive(self.cell_area))
        {
            return Err(Error::Config(
                "R_L, R_d, C_d, L, V_T and A_P must be positive".into(),
            ));
        }
        if !(self.r_sigma() > 0.0) {
            return Err(Error::Config("R_sigma must be positive".into()));
        }
        if self.info_junction >= self.n() {
            return Err(Error::Config(format!(
                "info junction {} out of range for N = {}",
                self.info_junction + 1,
                self.n()
            )));
        }
        if let Some(r) = self.info_responsivity_override {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::Config("responsivity override must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// Departures of this receiver from the reference tables, for run metadata.
    pub fn deviations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n() == 1 {
            let b = self.junctions[0].band;
            if (b.lambda_max - SINGLE_JUNCTION_EXTENDED_MAX_NM * 1e-9).abs() < 1e-15 {
                out.push(
                    "single-junction passband extended from 400-700 nm to 400-1000 nm so the \
                     980 nm information carrier is absorbed"
                        .to_string(),
                );
            }
        }
        if self.info_responsivity_override.is_some() {
            out.push("information responsivity taken from explicit override".to_string());
        }
        out
    }
}

/// Junction responsivity r(λ) = λ η q₀ / (k_p c) inside the passband, 0 outside.
pub fn responsivity(wavelength: f64, junction: &JunctionSpec, k: &PhysicalConstants) -> f64 {
    if junction.band.contains(wavelength) {
        wavelength * junction.eta * k.quantum_responsivity()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientModel {
    /// Sunlight intensity coefficient μ_a ≥ 0.
    pub mu_a: f64,
}

impl AmbientModel {
    pub fn new(mu_a: f64) -> Result<Self> {
        if mu_a >= 0.0 && mu_a.is_finite() {
            Ok(AmbientModel { mu_a })
        } else {
            Err(Error::Config(format!("ambient coefficient {mu_a} must be >= 0")))
        }
    }
}

/// Ambient power spectral density μ_a ν_s p_B(λ) in W/m.
pub fn ambient_psd(wavelength: f64, ambient: &AmbientModel, rx: &ReceiverSpec) -> Result<f64> {
    let k = &rx.constants;
    let radiance = planck_radiance(wavelength, k.t_sun, k)?;
    Ok(ambient.mu_a * k.nu_s(rx.cell_area) * radiance)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLine {
    pub wavelength: f64,
    pub power: f64,
    pub gain: f64,
}

/// Energy-providing signal: a sum of laser lines.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergySignal {
    pub lines: Vec<EnergyLine>,
}

impl EnergySignal {
    pub fn none() -> Self {
        EnergySignal { lines: Vec::new() }
    }

    /// N lines at the reference band midpoints with p_n = p/N and unit gains.
    /// The single-junction line stays at 550 nm, the midpoint of the
    /// unextended 400–700 nm band.
    pub fn reference(junctions: usize, total_power: f64) -> Result<Self> {
        let bands = reference_bands_nm(junctions)?;
        let per_line = total_power / junctions as f64;
        Ok(EnergySignal {
            lines: bands
                .into_iter()
                .map(|(lo, hi)| EnergyLine {
                    wavelength: 0.5 * (lo + hi) * 1e-9,
                    power: per_line,
                    gain: 1.0,
                })
                .collect(),
        })
    }

    /// Lines at the midpoints of the receiver's own bands, p_n = p/N.
    pub fn at_band_midpoints(rx: &ReceiverSpec, total_power: f64) -> Self {
        let per_line = total_power / rx.n() as f64;
        EnergySignal {
            lines: rx
                .junctions
                .iter()
                .map(|j| EnergyLine {
                    wavelength: j.band.midpoint(),
                    power: per_line,
                    gain: 1.0,
                })
                .collect(),
        }
    }

    pub fn total_power(&self) -> f64 {
        self.lines.iter().map(|l| l.power).sum()
    }

    /// Same wavelengths and gains, total power rescaled to `total_power`
    /// with the per-line split preserved (even split when currently zero).
    pub fn with_total_power(&self, total_power: f64) -> Self {
        let current = self.total_power();
        let n = self.lines.len().max(1) as f64;
        EnergySignal {
            lines: self
                .lines
                .iter()
                .map(|l| EnergyLine {
                    power: if current > 0.0 {
                        l.power * total_power / current
                    } else {
                        total_power / n
                    },
                    ..*l
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.lines.iter().enumerate() {
            if !(l.wavelength > 0.0 && l.wavelength.is_finite()) {
                return Err(Error::Config(format!("energy line {i}: wavelength must be > 0")));
            }
            if !(l.power >= 0.0 && l.power.is_finite() && l.gain >= 0.0 && l.gain.is_finite()) {
                return Err(Error::Config(format!(
                    "energy line {i}: power and gain must be >= 0"
                )));
            }
            if self.lines[..i].iter().any(|o| o.wavelength == l.wavelength) {
                return Err(Error::Config(format!(
                    "energy line {i}: duplicate wavelength {:e}",
                    l.wavelength
                )));
            }
        }
        Ok(())
    }
}

/// Intensity-modulated information signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoSignal {
    /// Carrier wavelength λ₀, m.
    pub wavelength: f64,
    /// Channel gain h.
    pub gain: f64,
    /// Maximum transmit power A², W.
    pub a_sq: f64,
    /// Symbol period T, s.
    pub period: f64,
}

impl Default for InfoSignal {
    fn default() -> Self {
        InfoSignal {
            wavelength: 980e-9,
            gain: 1.0,
            a_sq: 0.1,
            period: 1e-3,
        }
    }
}

impl InfoSignal {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(Error::Config("carrier wavelength must be > 0".into()));
        }
        if !(self.gain >= 0.0 && self.gain.is_finite() && self.a_sq >= 0.0 && self.a_sq.is_finite())
        {
            return Err(Error::Config("h and A^2 must be >= 0".into()));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::Config("symbol period must be > 0".into()));
        }
        Ok(())
    }
}

/// Induced currents of the receiver: ambient plus energy-signal currents per
/// junction, and the gain from transmit power to information current.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotocurrentState {
    /// j^a_n per junction, A.
    pub ambient: Vec<f64>,
    /// g_s = h r(λ₀), A/W.
    pub info_gain: f64,
    /// Junction that carries j^s.
    pub info_junction: usize,
}

impl PhotocurrentState {
    /// State with given ambient currents and information gain.
    pub fn new(ambient: Vec<f64>, info_gain: f64, info_junction: usize) -> Result<Self> {
        if ambient.is_empty() || info_junction >= ambient.len() {
            return Err(Error::Config("info junction outside current vector".into()));
        }
        if ambient.iter().any(|j| !(*j >= 0.0 && j.is_finite()))
            || !(info_gain >= 0.0 && info_gain.is_finite())
        {
            return Err(Error::Config("photocurrents must be finite and >= 0".into()));
        }
        Ok(PhotocurrentState {
            ambient,
            info_gain,
            info_junction,
        })
    }

    pub fn n(&self) -> usize {
        self.ambient.len()
    }

    /// j^s = g_s s.
    pub fn info_current(&self, s: f64) -> f64 {
        self.info_gain * s
    }

    /// Per-junction currents for information current `j_s`.
    pub fn junction_currents(&self, j_s: f64) -> Vec<f64> {
        let mut j = self.ambient.clone();
        j[self.info_junction] += j_s;
        j
    }
}

/// Integrates the received spectrum against each junction's responsivity.
pub fn photocurrents(
    rx: &ReceiverSpec,
    ambient: &AmbientModel,
    energy: &EnergySignal,
    info: &InfoSignal,
) -> Result<PhotocurrentState> {
    photocurrents_with(rx, ambient, energy, info, QuadTolerance::default())
}

pub fn photocurrents_with(
    rx: &ReceiverSpec,
    ambient: &AmbientModel,
    energy: &EnergySignal,
    info: &InfoSignal,
    tol: QuadTolerance,
) -> Result<PhotocurrentState> {
    rx.validate()?;
    energy.validate()?;
    info.validate()?;
    let k = &rx.constants;

    let mut currents = Vec::with_capacity(rx.n());
    for junction in &rx.junctions {
        let lines: f64 = energy
            .lines
            .iter()
            .map(|l| l.power * l.gain * responsivity(l.wavelength, junction, k))
            .sum();
        let ambient_current = if ambient.mu_a > 0.0 {
            let band = junction.band;
            integrate(
                |lambda| {
                    ambient_psd(lambda, ambient, rx).unwrap_or(0.0)
                        * responsivity(lambda, junction, k)
                },
                band.lambda_min,
                band.lambda_max,
                tol,
            )?
        } else {
            0.0
        };
        currents.push(lines + ambient_current);
    }

    let info_gain = match rx.info_responsivity_override {
        Some(r) => info.gain * r,
        None => {
            let junction = &rx.junctions[rx.info_junction];
            if !junction.band.contains(info.wavelength) {
                return Err(Error::Config(format!(
                    "information carrier {:.1} nm lies outside junction {} ({:.1}-{:.1} nm) \
                     and no responsivity override is set",
                    info.wavelength * 1e9,
                    rx.info_junction + 1,
                    junction.band.lambda_min * 1e9,
                    junction.band.lambda_max * 1e9
                )));
            }
            info.gain * responsivity(info.wavelength, junction, k)
        }
    };

    PhotocurrentState::new(currents, info_gain, rx.info_junction)
}
