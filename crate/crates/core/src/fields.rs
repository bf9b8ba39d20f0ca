//! Beltrami fields and the registry that builds them from spec strings.
//!
//! A spec string is `name` or `name:args`, for example `constant:0.3`,
//! `constant:0.2-0.1i`, `radial` or `fuchsian:0.5:6`. Each name maps to a
//! factory; [`FieldRegistry::builtin`] registers the catalog below and more
//! can be added with [`FieldRegistry::register`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::beltrami::NuRule;
use crate::error::{Error, Result};
use crate::fuchsian::{self, GroupEnumeration};
use crate::oracles::{self, Oracle};

/// A Beltrami derivative `mu` on the closed unit disk.
pub trait BeltramiField: Send + Sync + fmt::Debug {
    /// Canonical spec string; parsing it yields an equivalent field.
    fn spec(&self) -> String;

    fn eval(&self, z: Complex64) -> Result<Complex64>;

    /// Closed-form reference solution used by `verify`, if one exists.
    fn oracle(&self) -> Option<Arc<dyn Oracle>> {
        None
    }

    /// Preferred per-triangle averaging. Fields that jump across triangle
    /// interiors should ask for the area mean.
    fn nu_rule(&self) -> NuRule {
        NuRule::VertexMean
    }
}

pub type FieldHandle = Arc<dyn BeltramiField>;

type Factory = Box<dyn Fn(Option<&str>) -> Result<FieldHandle> + Send + Sync>;

struct Entry {
    usage: &'static str,
    factory: Factory,
}

/// Name -> factory map for Beltrami fields.
pub struct FieldRegistry {
    entries: BTreeMap<String, Entry>,
}

impl fmt::Debug for FieldRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldRegistry").field("names", &self.catalog()).finish()
    }
}

impl FieldRegistry {
    pub fn empty() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// Registry holding every builtin field.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("constant", "constant:<re>[+<im>i]", |args| {
            let arg = args.ok_or_else(|| parse_err("constant", "missing value"))?;
            Ok(Arc::new(Constant::new(parse_complex(arg)?)?))
        });
        r.register("radial", "radial", |args| {
            no_args("radial", args)?;
            Ok(Arc::new(Radial))
        });
        r.register("sectorial", "sectorial", |args| {
            no_args("sectorial", args)?;
            Ok(Arc::new(Sectorial))
        });
        r.register("daripa1", "daripa1", |args| {
            no_args("daripa1", args)?;
            Ok(Arc::new(Daripa1))
        });
        r.register("daripa2", "daripa2", |args| {
            no_args("daripa2", args)?;
            Ok(Arc::new(Daripa2))
        });
        r.register("oscillate", "oscillate", |args| {
            no_args("oscillate", args)?;
            Ok(Arc::new(Oscillate))
        });
        r.register("fuchsian", "fuchsian:<c>[:<wordLen>]", |args| {
            let args = args.ok_or_else(|| parse_err("fuchsian", "missing coefficient"))?;
            let mut parts = args.split(':');
            let c = parse_real(parts.next().unwrap_or_default())?;
            let len = match parts.next() {
                Some(s) => s.trim().parse::<usize>().map_err(|e| parse_err(s, &e.to_string()))?,
                None => fuchsian::DEFAULT_WORD_LENGTH,
            };
            if parts.next().is_some() {
                return Err(parse_err(args, "expected fuchsian:<c>[:<wordLen>]"));
            }
            Ok(Arc::new(Fuchsian::new(c, len)?))
        });
        r
    }

    pub fn register<F>(&mut self, name: &str, usage: &'static str, factory: F)
    where
        F: Fn(Option<&str>) -> Result<FieldHandle> + Send + Sync + 'static,
    {
        self.entries.insert(name.to_string(), Entry { usage, factory: Box::new(factory) });
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Usage strings of every registered field, comma separated.
    pub fn catalog(&self) -> String {
        self.entries.values().map(|e| e.usage).collect::<Vec<_>>().join(", ")
    }

    pub fn parse(&self, spec: &str) -> Result<FieldHandle> {
        let spec = spec.trim();
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (spec, None),
        };
        let entry = self.entries.get(name).ok_or_else(|| Error::Parse {
            input: spec.to_string(),
            reason: format!("unknown field; valid specs are: {}", self.catalog()),
        })?;
        (entry.factory)(args)
    }
}

fn parse_err(input: &str, reason: &str) -> Error {
    Error::Parse { input: input.to_string(), reason: reason.to_string() }
}

fn no_args(name: &str, args: Option<&str>) -> Result<()> {
    match args {
        None => Ok(()),
        Some(a) => Err(parse_err(a, &format!("`{name}` takes no arguments"))),
    }
}

fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    s.parse::<f64>().map_err(|e| parse_err(s, &e.to_string()))
}

/// Parses `a`, `a+bi`, `a-bi`, `bi`, `i`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim();
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(parse_real(s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            t => parse_real(t),
        }
    };
    match split {
        Some(i) => Ok(Complex64::new(parse_real(&body[..i])?, imag(&body[i..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

fn format_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.im > 0.0 {
        format!("{}+{}i", c.re, c.im)
    } else {
        format!("{}{}i", c.re, c.im)
    }
}

fn angle_factor(z: Complex64) -> Result<Complex64> {
    let r2 = z.norm_sqr();
    if r2 == 0.0 {
        return Err(Error::Domain("field is undefined at z = 0".into()));
    }
    Ok(z * z / r2)
}

/// `mu(z) = c`.
#[derive(Debug, Clone, Copy)]
pub struct Constant {
    value: Complex64,
}

impl Constant {
    pub fn new(value: Complex64) -> Result<Self> {
        if !(value.norm() < 1.0) {
            return Err(Error::InadmissibleField(format!("|c| = {} >= 1", value.norm())));
        }
        Ok(Self { value })
    }

    pub fn value(&self) -> Complex64 {
        self.value
    }
}

impl BeltramiField for Constant {
    fn spec(&self) -> String {
        format!("constant:{}", format_complex(self.value))
    }

    fn eval(&self, _z: Complex64) -> Result<Complex64> {
        Ok(self.value)
    }

    fn oracle(&self) -> Option<Arc<dyn Oracle>> {
        let c = self.value;
        if c == Complex64::new(0.0, 0.0) {
            return Some(Arc::new(oracles::Identity));
        }
        if c.im != 0.0 {
            return None;
        }
        let o = oracles::ConstantOracle::new(c.re).ok()?;
        Some(Arc::new(o))
    }
}

/// Field of the radial stretch `f(z) = phi(|z|) z/|z|`.
#[derive(Debug, Clone, Copy)]
pub struct Radial;

impl BeltramiField for Radial {
    fn spec(&self) -> String {
        "radial".into()
    }

    fn eval(&self, z: Complex64) -> Result<Complex64> {
        let rot = angle_factor(z)?;
        let s = oracles::radial_log_derivative(z.norm());
        Ok(rot * ((s - 1.0) / (s + 1.0)))
    }

    fn oracle(&self) -> Option<Arc<dyn Oracle>> {
        Some(Arc::new(oracles::RadialOracle))
    }
}

/// Field of the angular reparametrization `f(z) = |z| exp(i psi(arg z))`.
///
/// `psi' = 1/2` on `[0, pi)` and `3/2` on `[pi, 2 pi)`.
#[derive(Debug, Clone, Copy)]
pub struct Sectorial;

impl BeltramiField for Sectorial {
    fn spec(&self) -> String {
        "sectorial".into()
    }

    fn eval(&self, z: Complex64) -> Result<Complex64> {
        let rot = angle_factor(z)?;
        let theta = z.arg().rem_euclid(2.0 * PI);
        let d = oracles::sectorial_psi_prime(theta);
        Ok(rot * ((1.0 - d) / (1.0 + d)))
    }

    fn oracle(&self) -> Option<Arc<dyn Oracle>> {
        Some(Arc::new(oracles::SectorialOracle))
    }

    // jumps along arg z = 0 and pi
    fn nu_rule(&self) -> NuRule {
        NuRule::AreaMean(16)
    }
}

/// `mu(z) = |z|^2 exp(0.65 (i z^5 - 2))`.
#[derive(Debug, Clone, Copy)]
pub struct Daripa1;

impl BeltramiField for Daripa1 {
    fn spec(&self) -> String {
        "daripa1".into()
    }

    fn eval(&self, z: Complex64) -> Result<Complex64> {
        let e = 0.65 * (Complex64::i() * z.powu(5) - 2.0);
        Ok(z.norm_sqr() * e.exp())
    }
}

/// `mu(z) = |z|^2 sin(5 Re z) / 2`.
#[derive(Debug, Clone, Copy)]
pub struct Daripa2;

impl BeltramiField for Daripa2 {
    fn spec(&self) -> String {
        "daripa2".into()
    }

    fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(Complex64::new(0.5 * z.norm_sqr() * (5.0 * z.re).sin(), 0.0))
    }
}

/// `mu(z) = 0.9 sin |20 z|`.
#[derive(Debug, Clone, Copy)]
pub struct Oscillate;

impl BeltramiField for Oscillate {
    fn spec(&self) -> String {
        "oscillate".into()
    }

    fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(Complex64::new(0.9 * (20.0 * z.norm()).sin(), 0.0))
    }
}

/// Teichmüller-type differential `c conj(Theta)/|Theta|` of the theta series
/// for the punctured-torus group in [`fuchsian`].
#[derive(Debug, Clone)]
pub struct Fuchsian {
    c: f64,
    group: Arc<GroupEnumeration>,
}

impl Fuchsian {
    pub fn new(c: f64, word_length: usize) -> Result<Self> {
        if !(c.abs() < 1.0) {
            return Err(Error::InadmissibleField(format!("|c| = {} >= 1", c.abs())));
        }
        let group = Arc::new(fuchsian::enumerate_group(word_length)?);
        Ok(Self { c, group })
    }

    pub fn group(&self) -> &GroupEnumeration {
        &self.group
    }
}

impl BeltramiField for Fuchsian {
    fn spec(&self) -> String {
        format!("fuchsian:{}:{}", self.c, self.group.word_length())
    }

    fn eval(&self, z: Complex64) -> Result<Complex64> {
        // vertices on |z| = 1 sit on the limit set; sample just inside it
        let r = z.norm();
        let z = if r >= fuchsian::BOUNDARY_RADIUS { z * (fuchsian::BOUNDARY_RADIUS / r) } else { z };
        fuchsian::fuchsian_mu(self.c, &self.group, z)
    }
}
