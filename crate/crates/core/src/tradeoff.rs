//! Exact diversity-multiplexing tradeoff curves and their crossings.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{domain, invalid, Error, Result};

pub type Q = Ratio<i64>;

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

fn qi(n: i64) -> Q {
    Q::from_integer(n)
}

pub fn to_f64(x: Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `(p0 + p1 r) / (q0 + q1 r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalFn {
    pub p0: Q,
    pub p1: Q,
    pub q0: Q,
    pub q1: Q,
}

impl RationalFn {
    pub fn linear(c: Q, slope: Q) -> Self {
        Self {
            p0: c,
            p1: slope,
            q0: qi(1),
            q1: qi(0),
        }
    }

    pub fn eval(&self, r: Q) -> Q {
        (self.p0 + self.p1 * r) / (self.q0 + self.q1 * r)
    }

    pub fn eval_f64(&self, r: f64) -> f64 {
        (to_f64(self.p0) + to_f64(self.p1) * r) / (to_f64(self.q0) + to_f64(self.q1) * r)
    }
}

/// A formula valid on the closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Piece {
    pub lo: Q,
    pub hi: Q,
    pub f: RationalFn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TradeoffScheme {
    Stc,
    Tda,
    /// Repetition-coded delay diversity; the lower curve depends on `delta1`.
    Rtda {
        delta1: Q,
    },
    Ltda,
    Astc,
    MixAf,
    Naf,
    Ddf,
}

impl TradeoffScheme {
    pub fn name(&self) -> &'static str {
        match self {
            TradeoffScheme::Stc => "stc",
            TradeoffScheme::Tda => "tda",
            TradeoffScheme::Rtda { .. } => "rtda",
            TradeoffScheme::Ltda => "ltda",
            TradeoffScheme::Astc => "astc",
            TradeoffScheme::MixAf => "mixaf",
            TradeoffScheme::Naf => "naf",
            TradeoffScheme::Ddf => "ddf",
        }
    }

    /// All schemes; the repetition scheme uses `delta1`.
    pub fn all(delta1: Q) -> [TradeoffScheme; 8] {
        [
            TradeoffScheme::Stc,
            TradeoffScheme::Tda,
            TradeoffScheme::Rtda { delta1 },
            TradeoffScheme::Ltda,
            TradeoffScheme::Astc,
            TradeoffScheme::MixAf,
            TradeoffScheme::Naf,
            TradeoffScheme::Ddf,
        ]
    }

    /// Whether the scheme is defined for `k` relays.
    pub fn supports(&self, k: u32) -> bool {
        match self {
            TradeoffScheme::Tda | TradeoffScheme::Rtda { .. } | TradeoffScheme::Ltda => k == 2,
            TradeoffScheme::MixAf => k == 1 || k == 2,
            _ => k >= 1,
        }
    }
}

impl fmt::Display for TradeoffScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TradeoffScheme {
    type Err = Error;

    /// Parses a scheme name; `rtda` gets `delta1 = 1`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "stc" | "stcsync" => Ok(TradeoffScheme::Stc),
            "tda" | "tdaindep" => Ok(TradeoffScheme::Tda),
            "rtda" | "tdarepetition" => Ok(TradeoffScheme::Rtda { delta1: qi(1) }),
            "ltda" | "tdalinmod" => Ok(TradeoffScheme::Ltda),
            "astc" => Ok(TradeoffScheme::Astc),
            "mixaf" | "maf" => Ok(TradeoffScheme::MixAf),
            "naf" => Ok(TradeoffScheme::Naf),
            "ddf" => Ok(TradeoffScheme::Ddf),
            _ => Err(invalid("scheme", format!("unknown tradeoff scheme `{s}`"))),
        }
    }
}

/// Declared domain `[lo, hi]` or `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Domain {
    pub lo: Q,
    pub hi: Q,
    pub hi_open: bool,
}

impl Domain {
    pub fn contains(&self, r: Q) -> bool {
        r >= self.lo && (r < self.hi || (!self.hi_open && r == self.hi))
    }
}

/// Piecewise definition of a scheme's lower and upper tradeoff curves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveDef {
    pub scheme: TradeoffScheme,
    pub k: u32,
    pub domain: Domain,
    pub low: Vec<Piece>,
    pub high: Vec<Piece>,
}

fn eval_pieces(pieces: &[Piece], r: Q) -> Option<Q> {
    pieces.iter().find(|p| p.lo <= r && r <= p.hi).map(|p| p.f.eval(r))
}

fn lin(lo: Q, hi: Q, c: Q, slope: Q) -> Piece {
    Piece {
        lo,
        hi,
        f: RationalFn::linear(c, slope),
    }
}

impl CurveDef {
    pub fn new(scheme: TradeoffScheme, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "need at least one relay"));
        }
        if !scheme.supports(k) {
            return Err(domain(
                "relay count",
                format!("{scheme} is defined for other K, got K={k}"),
            ));
        }
        let kq = qi(k as i64);
        let half = q(1, 2);
        let two_phase = Domain {
            lo: qi(0),
            hi: half,
            hi_open: true,
        };
        let full = Domain {
            lo: qi(0),
            hi: qi(1),
            hi_open: false,
        };
        // (K + 1)(1 - 2r)
        let stc = vec![lin(qi(0), half, kq + 1, -(kq + 1) * 2)];
        let (dom, low, high) = match scheme {
            TradeoffScheme::Stc | TradeoffScheme::Tda | TradeoffScheme::Ltda | TradeoffScheme::Astc => {
                (two_phase, stc.clone(), stc)
            }
            TradeoffScheme::Rtda { delta1 } => {
                if delta1 < qi(0) || delta1 > qi(1) {
                    return Err(invalid("delta1", format!("must lie in [0, 1], got {delta1}")));
                }
                let low = if delta1.is_zero() {
                    vec![lin(qi(0), half, qi(0), qi(0))]
                } else {
                    // 3 - 6r / delta1, floored at zero past r = delta1 / 2
                    let knee = delta1 / 2;
                    let mut v = vec![lin(qi(0), knee.min(half), qi(3), qi(-6) / delta1)];
                    if knee < half {
                        v.push(lin(knee, half, qi(0), qi(0)));
                    }
                    v
                };
                (two_phase, low, stc)
            }
            TradeoffScheme::MixAf => {
                let pieces = if k == 1 {
                    vec![lin(qi(0), q(1, 4), qi(2), qi(-2)), lin(q(1, 4), half, qi(3), qi(-6))]
                } else {
                    vec![lin(qi(0), q(1, 6), qi(3), qi(-2)), lin(q(1, 6), half, qi(4), qi(-8))]
                };
                let d = Domain {
                    lo: qi(0),
                    hi: half,
                    hi_open: false,
                };
                (d, pieces.clone(), pieces)
            }
            TradeoffScheme::Naf => {
                let pieces = vec![lin(qi(0), half, kq + 1, -(kq * 2 + 1)), lin(half, qi(1), qi(1), qi(-1))];
                (full, pieces.clone(), pieces)
            }
            TradeoffScheme::Ddf => {
                let b = Q::new(1, k as i64 + 1);
                let pieces = vec![
                    lin(qi(0), b, kq + 1, -(kq + 1)),
                    // 1 + K(1 - 2r)/(1 - r) = ((1 + K) - (1 + 2K) r) / (1 - r)
                    Piece {
                        lo: b,
                        hi: half,
                        f: RationalFn {
                            p0: kq + 1,
                            p1: -(kq * 2 + 1),
                            q0: qi(1),
                            q1: qi(-1),
                        },
                    },
                    // (1 - r) / r
                    Piece {
                        lo: half,
                        hi: qi(1),
                        f: RationalFn {
                            p0: qi(1),
                            p1: qi(-1),
                            q0: qi(0),
                            q1: qi(1),
                        },
                    },
                ];
                (full, pieces.clone(), pieces)
            }
        };
        Ok(Self {
            scheme,
            k,
            domain: dom,
            low,
            high,
        })
    }

    /// Exact `(d_low, d_high)` at `r`.
    pub fn eval(&self, r: Q) -> Result<(Q, Q)> {
        if !self.domain.contains(r) {
            return Err(domain(
                "multiplexing gain",
                format!(
                    "{} is defined on [{}, {}{}, got r={r}",
                    self.scheme,
                    self.domain.lo,
                    self.domain.hi,
                    if self.domain.hi_open { ")" } else { "]" }
                ),
            ));
        }
        let lo = eval_pieces(&self.low, r).expect("pieces cover the domain");
        let hi = eval_pieces(&self.high, r).expect("pieces cover the domain");
        Ok((lo, hi))
    }

    /// Interior points where either curve changes formula.
    pub fn breakpoints(&self) -> Vec<Q> {
        let mut v: Vec<Q> = self
            .low
            .iter()
            .chain(&self.high)
            .flat_map(|p| [p.lo, p.hi])
            .filter(|&x| x > self.domain.lo && x < self.domain.hi)
            .collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Exact `(d_low, d_high)` of `scheme` with `k` relays at `r`.
pub fn d_curve(scheme: TradeoffScheme, k: u32, r: Q) -> Result<(Q, Q)> {
    CurveDef::new(scheme, k)?.eval(r)
}

/// Floating-point `(d_low, d_high)`.
pub fn d_curve_f64(scheme: TradeoffScheme, k: u32, r: f64) -> Result<(f64, f64)> {
    let def = CurveDef::new(scheme, k)?;
    let rq = Q::approximate_float(r).ok_or_else(|| invalid("r", format!("not representable: {r}")))?;
    if !def.domain.contains(rq) {
        return def.eval(rq).map(|_| (0.0, 0.0));
    }
    let find = |pieces: &[Piece]| {
        pieces
            .iter()
            .find(|p| to_f64(p.lo) <= r && r <= to_f64(p.hi))
            .map(|p| p.f.eval_f64(r))
            .expect("pieces cover the domain")
    };
    Ok((find(&def.low), find(&def.high)))
}

/// One sampled point of a tradeoff curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TradeoffSample {
    pub r: Q,
    pub d_low: Q,
    pub d_high: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeoffCurve {
    pub scheme: TradeoffScheme,
    pub k: u32,
    pub samples: Vec<TradeoffSample>,
    pub breakpoints: Vec<Q>,
}

/// Samples on the grid `0, step, 2 step, ...` over the domain, merged with
/// the breakpoints.
pub fn sample_curve(scheme: TradeoffScheme, k: u32, step: Q) -> Result<TradeoffCurve> {
    if step <= qi(0) {
        return Err(invalid("step", format!("must be positive, got {step}")));
    }
    let def = CurveDef::new(scheme, k)?;
    let mut rs = Vec::new();
    let mut r = def.domain.lo;
    while def.domain.contains(r) {
        rs.push(r);
        r += step;
    }
    let breakpoints = def.breakpoints();
    rs.extend(breakpoints.iter().copied());
    rs.sort();
    rs.dedup();
    let samples = rs
        .into_iter()
        .map(|r| {
            let (d_low, d_high) = def.eval(r)?;
            Ok(TradeoffSample { r, d_low, d_high })
        })
        .collect::<Result<_>>()?;
    Ok(TradeoffCurve {
        scheme,
        k,
        samples,
        breakpoints,
    })
}

/// Location of a crossing, exact when rational.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossingPoint {
    Exact(Q),
    /// Irrational root of a quadratic.
    Approx(f64),
}

impl CrossingPoint {
    pub fn value(&self) -> f64 {
        match self {
            CrossingPoint::Exact(x) => to_f64(*x),
            CrossingPoint::Approx(x) => *x,
        }
    }
}

impl fmt::Display for CrossingPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrossingPoint::Exact(x) => write!(f, "{x}"),
            CrossingPoint::Approx(x) => write!(f, "~{x:.15}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    /// The difference changes sign.
    SignChange(CrossingPoint),
    /// The curves meet without changing order, including at domain ends.
    Touch(CrossingPoint),
    /// The curves agree on a whole interval.
    Coincident { lo: Q, hi: Q },
}

/// Numerator of `fa - fb` as `n0 + n1 r + n2 r^2`.
fn difference_numerator(a: &RationalFn, b: &RationalFn) -> [Q; 3] {
    // pa qb - pb qa
    [
        a.p0 * b.q0 - b.p0 * a.q0,
        a.p0 * b.q1 + a.p1 * b.q0 - b.p0 * a.q1 - b.p1 * a.q0,
        a.p1 * b.q1 - b.p1 * a.q1,
    ]
}

fn exact_sqrt(x: Q) -> Option<Q> {
    fn isqrt(n: i64) -> Option<i64> {
        if n < 0 {
            return None;
        }
        let r = (n as f64).sqrt().round() as i64;
        (r.checked_mul(r)? == n).then_some(r)
    }
    Some(Q::new(isqrt(*x.numer())?, isqrt(*x.denom())?))
}

fn roots_in(n: [Q; 3], lo: Q, hi: Q) -> Vec<CrossingPoint> {
    let [c, b, a] = n;
    let mut out = Vec::new();
    let inside = |x: f64| x >= to_f64(lo) - 1e-15 && x <= to_f64(hi) + 1e-15;
    if a.is_zero() {
        if !b.is_zero() {
            let x = -c / b;
            if x >= lo && x <= hi {
                out.push(CrossingPoint::Exact(x));
            }
        }
        return out;
    }
    let disc = b * b - a * c * 4;
    if disc < qi(0) {
        return out;
    }
    match exact_sqrt(disc) {
        Some(s) => {
            for x in [(-b - s) / (a * 2), (-b + s) / (a * 2)] {
                if x >= lo && x <= hi && !out.contains(&CrossingPoint::Exact(x)) {
                    out.push(CrossingPoint::Exact(x));
                }
            }
        }
        None => {
            let s = to_f64(disc).sqrt();
            let (af, bf) = (to_f64(a), to_f64(b));
            for x in [(-bf - s) / (2.0 * af), (-bf + s) / (2.0 * af)] {
                if inside(x) {
                    out.push(CrossingPoint::Approx(x));
                }
            }
        }
    }
    out
}

/// Crossings of the upper curves of two schemes on their common domain.
pub fn crossings(a: TradeoffScheme, b: TradeoffScheme, k: u32) -> Result<Vec<Crossing>> {
    let da = CurveDef::new(a, k)?;
    let db = CurveDef::new(b, k)?;
    let lo = da.domain.lo.max(db.domain.lo);
    let hi = da.domain.hi.min(db.domain.hi);
    if lo >= hi {
        return Ok(Vec::new());
    }
    let mut cuts = vec![lo, hi];
    for p in da.high.iter().chain(&db.high) {
        for x in [p.lo, p.hi] {
            if x > lo && x < hi {
                cuts.push(x);
            }
        }
    }
    cuts.sort();
    cuts.dedup();

    let piece_at = |pieces: &[Piece], x: Q| -> RationalFn {
        pieces
            .iter()
            .find(|p| p.lo <= x && x <= p.hi)
            .map(|p| p.f)
            .expect("pieces cover the domain")
    };
    let diff = |x: f64| -> f64 {
        let pick = |pieces: &[Piece]| {
            pieces
                .iter()
                .find(|p| to_f64(p.lo) <= x && x <= to_f64(p.hi))
                .map(|p| p.f.eval_f64(x))
                .expect("pieces cover the domain")
        };
        pick(&da.high) - pick(&db.high)
    };

    let mut coincident: Vec<(Q, Q)> = Vec::new();
    let mut points: Vec<CrossingPoint> = Vec::new();
    for w in cuts.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let mid = (x0 + x1) / 2;
        let n = difference_numerator(&piece_at(&da.high, mid), &piece_at(&db.high, mid));
        if n.iter().all(|c| c.is_zero()) {
            match coincident.last_mut() {
                Some(last) if last.1 == x0 => last.1 = x1,
                _ => coincident.push((x0, x1)),
            }
            continue;
        }
        for root in roots_in(n, x0, x1) {
            let dup = points.iter().any(|p| (p.value() - root.value()).abs() < 1e-14);
            if !dup {
                points.push(root);
            }
        }
    }
    points.sort_by(|x, y| x.value().total_cmp(&y.value()));

    let in_coincident = |x: f64| {
        coincident
            .iter()
            .any(|&(l, h)| x >= to_f64(l) - 1e-15 && x <= to_f64(h) + 1e-15)
    };
    let mut out: Vec<Crossing> = coincident
        .iter()
        .map(|&(lo, hi)| Crossing::Coincident { lo, hi })
        .collect();
    let (lof, hif) = (to_f64(lo), to_f64(hi));
    for (i, p) in points.iter().enumerate() {
        let x = p.value();
        if in_coincident(x) {
            continue;
        }
        let left = if i > 0 { points[i - 1].value() } else { lof };
        let right = if i + 1 < points.len() {
            points[i + 1].value()
        } else {
            hif
        };
        let at_end = x <= lof + 1e-15 || x >= hif - 1e-15;
        let kind = if at_end {
            Crossing::Touch(*p)
        } else {
            let sl = diff(0.5 * (left + x));
            let sr = diff(0.5 * (x + right));
            if sl.signum() != sr.signum() && sl != 0.0 && sr != 0.0 {
                Crossing::SignChange(*p)
            } else {
                Crossing::Touch(*p)
            }
        };
        out.push(kind);
    }
    out.sort_by(|x, y| {
        let key = |c: &Crossing| match c {
            Crossing::SignChange(p) | Crossing::Touch(p) => p.value(),
            Crossing::Coincident { lo, .. } => to_f64(*lo),
        };
        key(x).total_cmp(&key(y))
    });
    Ok(out)
}

/// Sign-change crossings only, exact values.
pub fn sign_changes(a: TradeoffScheme, b: TradeoffScheme, k: u32) -> Result<Vec<CrossingPoint>> {
    Ok(crossings(a, b, k)?
        .into_iter()
        .filter_map(|c| match c {
            Crossing::SignChange(p) => Some(p),
            _ => None,
        })
        .collect())
}

pub fn abs_q(x: Q) -> Q {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stc_at_zero() {
        assert_eq!(d_curve(TradeoffScheme::Stc, 2, qi(0)).unwrap(), (qi(3), qi(3)));
    }

    #[test]
    fn mixaf_breakpoint_continuity() {
        let def = CurveDef::new(TradeoffScheme::MixAf, 2).unwrap();
        let r = q(1, 6);
        assert_eq!(def.low[0].f.eval(r), q(8, 3));
        assert_eq!(def.low[1].f.eval(r), q(8, 3));
    }

    #[test]
    fn ddf_and_naf_at_quarter() {
        assert_eq!(d_curve(TradeoffScheme::Ddf, 2, q(1, 4)).unwrap().0, q(9, 4));
        assert_eq!(d_curve(TradeoffScheme::Naf, 2, q(1, 4)).unwrap().0, q(7, 4));
    }

    #[test]
    fn two_phase_domain_error() {
        assert!(d_curve(TradeoffScheme::Stc, 2, q(1, 2)).is_err());
        assert!(d_curve(TradeoffScheme::Naf, 2, q(3, 4)).is_ok());
        assert!(d_curve(TradeoffScheme::Tda, 1, qi(0)).is_err());
    }

    #[test]
    fn mixaf_crossings_k2() {
        assert_eq!(
            sign_changes(TradeoffScheme::MixAf, TradeoffScheme::Ddf, 2).unwrap(),
            vec![CrossingPoint::Exact(q(1, 5))]
        );
        assert_eq!(
            sign_changes(TradeoffScheme::MixAf, TradeoffScheme::Naf, 2).unwrap(),
            vec![CrossingPoint::Exact(q(1, 3))]
        );
        let all = crossings(TradeoffScheme::MixAf, TradeoffScheme::Ddf, 2).unwrap();
        assert_eq!(all[0], Crossing::Touch(CrossingPoint::Exact(qi(0))));
    }

    #[test]
    fn stc_tda_coincident() {
        let c = crossings(TradeoffScheme::Stc, TradeoffScheme::Tda, 2).unwrap();
        assert_eq!(c, vec![Crossing::Coincident { lo: qi(0), hi: q(1, 2) }]);
    }

    #[test]
    fn rtda_bounds() {
        let d = q(2, 3);
        let (lo, hi) = d_curve(TradeoffScheme::Rtda { delta1: d }, 2, q(1, 5)).unwrap();
        assert_eq!(lo, qi(3) - q(6, 5) / d);
        assert_eq!(hi, qi(3) - q(6, 5));
        let (lo, hi) = d_curve(TradeoffScheme::Rtda { delta1: qi(1) }, 2, q(1, 5)).unwrap();
        assert_eq!(lo, hi);
        let (lo, _) = d_curve(TradeoffScheme::Rtda { delta1: q(1, 2) }, 2, q(2, 5)).unwrap();
        assert_eq!(lo, qi(0));
    }

    #[test]
    fn k1_naf_is_two_minus_three_r() {
        for r in [qi(0), q(1, 7), q(1, 2)] {
            assert_eq!(d_curve(TradeoffScheme::Naf, 1, r).unwrap().0, qi(2) - r * 3);
        }
    }

    #[test]
    fn ddf_rational_piece_crossing_is_irrational_or_exact() {
        // mixaf K=1 vs ddf K=1: 2 - 2r vs 2 - 2r on [0, 1/4] coincide
        let c = crossings(TradeoffScheme::MixAf, TradeoffScheme::Ddf, 1).unwrap();
        assert!(matches!(c[0], Crossing::Coincident { .. }));
    }

    #[test]
    fn sampling_includes_breakpoints() {
        let c = sample_curve(TradeoffScheme::MixAf, 2, q(1, 10)).unwrap();
        assert!(c.samples.iter().any(|s| s.r == q(1, 6)));
        assert_eq!(c.samples.last().unwrap().r, q(1, 2));
        let s = sample_curve(TradeoffScheme::Stc, 2, q(1, 10)).unwrap();
        assert!(s.samples.iter().all(|x| x.r < q(1, 2)));
    }
}
