//! Piecewise-constant admittivity phantoms and the closed-form contrast
//! constants of the detection test.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Mesh, RegionSpec};
use crate::scalar::{cplx, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Inclusion<T> {
    pub region: RegionSpec<T>,
    pub sigma: T,
    pub eps: T,
}

/// Constant background with inclusions; admittivity `sigma + i*omega*eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom<T> {
    pub sigma_bg: T,
    pub eps_bg: T,
    pub inclusions: Vec<Inclusion<T>>,
    pub omega: T,
}

/// Multiplies the DC admittivity in `region` by `1 + sign * beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulation<T> {
    pub region: RegionSpec<T>,
    pub beta: T,
    pub sign: ModulationSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulationSign {
    Plus,
    Minus,
}

impl ModulationSign {
    pub fn factor<T: Real>(self) -> T {
        match self {
            ModulationSign::Plus => T::one(),
            ModulationSign::Minus => -T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreqMode {
    /// omega = 0: purely real conductivity.
    Dc,
    /// The phantom's operating frequency.
    Ac,
}

impl<T: Real> Modulation<T> {
    pub fn validate(&self, domain_radius: T) -> Result<()> {
        self.region.validate()?;
        if !(self.beta > T::zero()) || !self.beta.is_finite() {
            return invalid("modulation strength beta must be > 0");
        }
        if self.sign == ModulationSign::Minus && !(self.beta < T::one()) {
            return invalid("beta must be < 1 for a (1 - beta) modulation");
        }
        if !self.region.strictly_inside_disk(domain_radius) {
            return invalid("modulation region must lie strictly inside the domain");
        }
        Ok(())
    }
}

/// Closed-form constants of the detection test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastConstants<T> {
    /// `eps_D sigma_bg - eps_bg sigma_D`.
    pub c: T,
    pub big_c: T,
    pub big_c_prime: T,
    /// Background admittivity ratio `1 + i omega eps_bg / sigma_bg`.
    pub alpha: Complex<T>,
    /// Largest admissible modulation for `c > 0` (plus-modulation).
    pub beta_max_a: T,
    /// Largest admissible modulation for `c < 0` (minus-modulation).
    pub beta_max_b: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestCase {
    /// `c > 0`: `R((1 + beta chi_B) gamma_0) - Re(alpha R(gamma_omega)) >= 0`.
    A,
    /// `c < 0`: `Re(alpha R(gamma_omega)) - R((1 - beta chi_B) gamma_0) >= 0`.
    B,
}

impl TestCase {
    pub fn modulation_sign(self) -> ModulationSign {
        match self {
            TestCase::A => ModulationSign::Plus,
            TestCase::B => ModulationSign::Minus,
        }
    }
}

impl<T: Real> ContrastConstants<T> {
    pub fn case(&self) -> TestCase {
        if self.c > T::zero() {
            TestCase::A
        } else {
            TestCase::B
        }
    }

    pub fn beta_max(&self) -> T {
        match self.case() {
            TestCase::A => self.beta_max_a,
            TestCase::B => self.beta_max_b,
        }
    }
}

impl<T: Real> Phantom<T> {
    /// Homogeneous phantom without inclusions.
    pub fn homogeneous(sigma: T, eps: T, omega: T) -> Self {
        Phantom {
            sigma_bg: sigma,
            eps_bg: eps,
            inclusions: Vec::new(),
            omega,
        }
    }

    pub fn validate(&self, domain_radius: T) -> Result<()> {
        let pos = |x: T| x > T::zero() && x.is_finite();
        if !pos(self.sigma_bg) || !pos(self.eps_bg) {
            return invalid("background sigma and eps must be > 0");
        }
        if !(self.omega >= T::zero()) || !self.omega.is_finite() {
            return invalid("omega must be >= 0");
        }
        for (k, inc) in self.inclusions.iter().enumerate() {
            inc.region.validate()?;
            if !pos(inc.sigma) || !pos(inc.eps) {
                return invalid(format!("inclusion {k}: sigma and eps must be > 0"));
            }
            if !inc.region.strictly_inside_disk(domain_radius) {
                return invalid(format!("inclusion {k} must lie strictly inside the domain"));
            }
            for (j, other) in self.inclusions.iter().enumerate().take(k) {
                if inc.region.intersects(&other.region) {
                    return invalid(format!("inclusions {j} and {k} overlap"));
                }
            }
        }
        Ok(())
    }

    pub fn background(&self, mode: FreqMode) -> Complex<T> {
        match mode {
            FreqMode::Dc => cplx(self.sigma_bg, T::zero()),
            FreqMode::Ac => cplx(self.sigma_bg, self.omega * self.eps_bg),
        }
    }

    /// Admittivity at a point (no modulation).
    pub fn admittivity_at(&self, p: [T; 2], mode: FreqMode) -> Complex<T> {
        for inc in &self.inclusions {
            if inc.region.contains(p) {
                return match mode {
                    FreqMode::Dc => cplx(inc.sigma, T::zero()),
                    FreqMode::Ac => cplx(inc.sigma, self.omega * inc.eps),
                };
            }
        }
        self.background(mode)
    }

    /// Per-element admittivity sampled at element centroids, optionally
    /// multiplied by `1 +/- beta chi_B` (DC only).
    pub fn element_admittivity(
        &self,
        mesh: &Mesh<T>,
        mode: FreqMode,
        modulation: Option<&Modulation<T>>,
    ) -> Result<Vec<Complex<T>>> {
        self.validate(mesh.radius())?;
        if let Some(md) = modulation {
            if mode == FreqMode::Ac {
                return Err(Error::UnsupportedCombination(
                    "ultrasound modulation is only applied to DC measurements".into(),
                ));
            }
            md.validate(mesh.radius())?;
        }
        Ok((0..mesh.triangles().len())
            .map(|t| {
                let c = mesh.centroid(t);
                let mut g = self.admittivity_at(c, mode);
                if let Some(md) = modulation {
                    if md.region.contains(c) {
                        g = g * (T::one() + md.sign.factor::<T>() * md.beta);
                    }
                }
                g
            })
            .collect())
    }

    /// The shared `(sigma_D, eps_D)` of all inclusions.
    pub fn inclusion_constants(&self) -> Result<(T, T)> {
        let first = self.inclusions.first().ok_or_else(|| {
            Error::Invalid("phantom has no inclusion; contrast constants undefined".into())
        })?;
        if self
            .inclusions
            .iter()
            .any(|i| i.sigma != first.sigma || i.eps != first.eps)
        {
            return invalid("all inclusions must share the same (sigma, eps)");
        }
        Ok((first.sigma, first.eps))
    }

    pub fn contrast_constants(&self) -> Result<ContrastConstants<T>> {
        let (sd, ed) = self.inclusion_constants()?;
        let (so, eo, w) = (self.sigma_bg, self.eps_bg, self.omega);
        if !(w > T::zero()) {
            return invalid("contrast constants need omega > 0");
        }
        let c = ed * so - eo * sd;
        if c == T::zero() {
            return Err(Error::ContrastViolated);
        }
        let w2 = w * w;
        let big_c = w2 * c / (sd * so + w2 * ed * eo);
        let big_c_prime = w2 * (so / sd) * c / (so * so + w2 * eo * eo);
        Ok(ContrastConstants {
            c,
            big_c,
            big_c_prime,
            alpha: cplx(T::one(), w * eo / so),
            beta_max_a: w2 * c.abs() * eo / (sd * (so * so + w2 * eo * eo)),
            beta_max_b: w2 * c.abs() * ed / (sd * (sd * so + w2 * ed * eo)),
        })
    }
}

/// One identity evaluated directly (complex arithmetic) and in closed form,
/// outside and inside the inclusion, at a point of the focusing region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityValues<T> {
    pub outside_direct: T,
    pub outside_closed: T,
    pub inside_direct: T,
    pub inside_closed: T,
    /// Size of the largest term entering the identity; exact zeros are
    /// compared against it.
    pub scale: T,
}

impl<T: Real> IdentityValues<T> {
    /// Largest disagreement between the two evaluation routes, relative to
    /// the values or the term scale, whichever is larger.
    pub fn max_relative_gap(&self) -> T {
        let rel = |a: T, b: T| {
            let scale = a.abs().max(b.abs()).max(self.scale);
            if scale == T::zero() {
                T::zero()
            } else {
                (a - b).abs() / scale
            }
        };
        rel(self.outside_direct, self.outside_closed)
            .max(rel(self.inside_direct, self.inside_closed))
    }
}

/// The four pointwise identities relating `gamma_omega / alpha` and
/// `(1 + beta~ chi_B) gamma_0`, with `chi_B = 1`.
pub fn pointwise_identities<T: Real>(
    phantom: &Phantom<T>,
    beta_tilde: T,
) -> Result<[IdentityValues<T>; 4]> {
    let k = phantom.contrast_constants()?;
    let (sd, ed) = phantom.inclusion_constants()?;
    let (so, eo, w) = (phantom.sigma_bg, phantom.eps_bg, phantom.omega);

    let g0 = [cplx(so, T::zero()), cplx(sd, T::zero())];
    let gw = [cplx(so, w * eo), cplx(sd, w * ed)];
    // direct route: alpha from complex division of the background values
    let alpha = gw[0] / g0[0];
    let direct = |region: usize| {
        let g1 = gw[region] / alpha;
        let g0r = g0[region];
        let gmod = g0r * (T::one() + beta_tilde);
        [
            (g0r.re / g1.re) * (g1 - g0r).re,
            (g1 - g0r).re + g1.im * g1.im / g1.re,
            (g1 - gmod).re,
            (g1 - gmod).re + g1.im * g1.im / g1.re,
        ]
    };
    let out = direct(0);
    let ins = direct(1);
    let scale = (0..2)
        .map(|r| {
            let g1 = gw[r] / alpha;
            (g0[r].re * (T::one() + beta_tilde.abs())).max(g1.norm_sqr() / g1.re)
        })
        .fold(T::zero(), T::max);
    let closed_out = [T::zero(), T::zero(), -beta_tilde * so, -beta_tilde * so];
    let closed_in = [
        eo * sd / so * k.big_c,
        ed * k.big_c,
        sd * (eo / so * k.big_c_prime - beta_tilde),
        ed * k.big_c - beta_tilde * sd,
    ];
    Ok(std::array::from_fn(|i| IdentityValues {
        outside_direct: out[i],
        outside_closed: closed_out[i],
        inside_direct: ins[i],
        inside_closed: closed_in[i],
        scale,
    }))
}
