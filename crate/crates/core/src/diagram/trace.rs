use rayon::prelude::*;

use super::{Branch, CurveBranch, CurveSample, EndpointTag, Parabola, SpecialPoint, ZPoint};
use crate::e3::{OrbitParams, Pole, SystemSpec};
use crate::error::{Error, Result};
use crate::singular::{quad_coeffs, rank1_classify, ThetaInterval};
use crate::tol::Tolerances;

/// Stop refining toward the equator once `|k|` exceeds this.
pub(super) const K_TRACE_MAX: f64 = 1e4;
/// Closest approach to a pole, as a fraction of the interval length.
const POLE_GAP: f64 = 1e-9;
/// Closest approach to the equator or a closed endpoint.
const END_GAP: f64 = 1e-12;
const MATCH_TOL: f64 = 1e-4;
/// Every emitted sample satisfies `|dW/dx| <= ENVELOPE_TOL`.
pub(super) const ENVELOPE_TOL: f64 = 1e-9;

pub(super) struct Context<'a> {
    pub sys: &'a SystemSpec,
    pub orb: &'a OrbitParams,
    pub tol: &'a Tolerances,
    pub z_points: &'a [ZPoint],
    pub special: Option<SpecialPoint>,
    pub parabola: Option<Parabola>,
}

impl Context<'_> {
    fn sample(&self, sigma: f64, x: f64) -> Result<Option<CurveSample>> {
        let c = quad_coeffs(self.sys, self.orb, x)?;
        let k = c.branch_root(sigma);
        if !k.is_finite() {
            return Ok(None);
        }
        // Close to a pole the terms of dW/dx grow like 1/u^2 and roundoff
        // alone can exceed the envelope tolerance; such samples are dropped.
        let w = self.sys.reduced_potential(self.orb, k, x)?;
        if w.w_dx.abs() > ENVELOPE_TOL {
            return Ok(None);
        }
        let p = match rank1_classify(self.sys, self.orb, k, x, self.tol) {
            Ok(p) => p,
            Err(Error::Precondition(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        Ok(Some(CurveSample {
            x,
            k,
            h: p.h,
            kind: p.kind,
            cusp: false,
        }))
    }

    /// `last` is the outermost sample and `prev` its neighbour.
    fn tag(
        &self,
        iv: &ThetaInterval,
        at_lo: bool,
        last: Option<&CurveSample>,
        prev: Option<&CurveSample>,
    ) -> EndpointTag {
        let (end, closed) = if at_lo {
            (iv.lo, iv.lo_closed)
        } else {
            (iv.hi, iv.hi_closed)
        };
        let Some(s) = last else {
            return EndpointTag::InteriorStop;
        };
        if closed {
            return EndpointTag::InteriorStop;
        }
        let close = |sh: f64, sk: f64, h: f64, k: f64| {
            (sh - h).abs() <= MATCH_TOL * (1.0 + h.abs())
                && (sk - k).abs() <= MATCH_TOL * (1.0 + k.abs())
        };
        if end != 0.0 {
            // Samples stop short of the pole where roundoff takes over; the
            // curve is smooth in x there, so extrapolate linearly.
            let (h, k) = match prev {
                Some(p) if p.x != s.x => {
                    let t = (end - s.x) / (s.x - p.x);
                    (s.h + t * (s.h - p.h), s.k + t * (s.k - p.k))
                }
                _ => (s.h, s.k),
            };
            let pole = if end > 0.0 { Pole::Plus } else { Pole::Minus };
            return match self.z_points.iter().find(|z| z.pole == pole) {
                Some(z) if close(h, k, z.h, z.k) => match pole {
                    Pole::Plus => EndpointTag::TendsToZPlus,
                    Pole::Minus => EndpointTag::TendsToZMinus,
                },
                _ => EndpointTag::InteriorStop,
            };
        }
        if s.k.abs() >= K_TRACE_MAX {
            return EndpointTag::TendsToInfinity;
        }
        if let Some(sp) = self.special {
            if close(s.h, s.k, sp.h, sp.k) {
                return EndpointTag::MeetsSpecialPoint;
            }
        }
        if let Some(pa) = self.parabola {
            if close(s.h, s.k, pa.value(s.k), s.k) {
                return EndpointTag::MeetsParabola;
            }
        }
        EndpointTag::InteriorStop
    }

    /// Samples approaching `end` from `inner`, spaced geometrically.
    fn refine(
        &self,
        sigma: f64,
        end: f64,
        inner: f64,
        is_pole: bool,
        len: f64,
    ) -> Result<Vec<CurveSample>> {
        let dir = (inner - end).signum();
        let min_gap = if is_pole { POLE_GAP } else { END_GAP } * len;
        let mut out = Vec::new();
        let mut gap = (inner - end).abs() * 0.5;
        while gap >= min_gap {
            let x = end + dir * gap;
            if x == end {
                break;
            }
            match self.sample(sigma, x)? {
                Some(s) => {
                    let stop = s.k.abs() > K_TRACE_MAX;
                    out.push(s);
                    if stop {
                        break;
                    }
                }
                None => break,
            }
            gap *= 0.5;
        }
        Ok(out)
    }

    pub fn trace(&self, iv: &ThetaInterval, branch: Branch, n: usize) -> Result<CurveBranch> {
        let sigma = branch.sign();
        let len = iv.len();
        let n = n.max(2);
        // Uniform samples; open endpoints are excluded.
        let mut xs: Vec<f64> = (0..n)
            .map(|i| iv.lo + len * i as f64 / (n - 1) as f64)
            .collect();
        if !iv.lo_closed {
            xs.remove(0);
        }
        if !iv.hi_closed {
            xs.pop();
        }
        let margin = 1e-3 * len;
        let lo_inner = iv.lo + margin;
        let hi_inner = iv.hi - margin;
        xs.retain(|&x| (iv.lo_closed || x >= lo_inner) && (iv.hi_closed || x <= hi_inner));
        if !iv.lo_closed {
            xs.insert(0, lo_inner);
        }
        if !iv.hi_closed {
            xs.push(hi_inner);
        }

        let mut samples = Vec::with_capacity(xs.len() + 64);
        let near_lo = self.refine(sigma, iv.lo, lo_inner, iv.lo != 0.0 && !iv.lo_closed, len)?;
        samples.extend(near_lo.into_iter().rev());
        for &x in &xs {
            if let Some(s) = self.sample(sigma, x)? {
                samples.push(s);
            }
        }
        if iv.lo_closed {
            // Refine just inside a closed endpoint as well.
            let extra = self.refine(sigma, iv.lo, iv.lo + len / (n - 1) as f64, false, len)?;
            merge(&mut samples, extra);
        }
        if iv.hi_closed {
            let extra = self.refine(sigma, iv.hi, iv.hi - len / (n - 1) as f64, false, len)?;
            merge(&mut samples, extra);
        }
        let near_hi = self.refine(sigma, iv.hi, hi_inner, iv.hi != 0.0 && !iv.hi_closed, len)?;
        samples.extend(near_hi);
        if !iv.lo_closed || !iv.hi_closed {
            samples.sort_by(|l, r| l.x.total_cmp(&r.x));
        }
        samples.dedup_by(|a, b| a.x == b.x);
        flag_cusps(&mut samples);

        let n_s = samples.len();
        let lo_tag = self.tag(iv, true, samples.first(), samples.get(1));
        let hi_tag = self.tag(
            iv,
            false,
            samples.last(),
            n_s.checked_sub(2).and_then(|i| samples.get(i)),
        );
        Ok(CurveBranch {
            branch,
            interval: (iv.lo, iv.hi),
            samples,
            endpoint_tags: [lo_tag, hi_tag],
        })
    }

    pub fn trace_all(&self, intervals: &[ThetaInterval], n: usize) -> Result<Vec<CurveBranch>> {
        let jobs: Vec<(ThetaInterval, Branch)> = intervals
            .iter()
            .flat_map(|iv| [(*iv, Branch::Plus), (*iv, Branch::Minus)])
            .collect();
        jobs.par_iter()
            .map(|(iv, b)| self.trace(iv, *b, n))
            .collect()
    }
}

fn merge(samples: &mut Vec<CurveSample>, extra: Vec<CurveSample>) {
    samples.extend(extra);
    samples.sort_by(|l, r| l.x.total_cmp(&r.x));
}

/// Marks samples where `k(x)` has a local extremum, judged by divided
/// differences: the only places the curve may fail to be regular.
fn flag_cusps(samples: &mut [CurveSample]) {
    for i in 1..samples.len().saturating_sub(1) {
        let before = (samples[i].k - samples[i - 1].k) / (samples[i].x - samples[i - 1].x);
        let after = (samples[i + 1].k - samples[i].k) / (samples[i + 1].x - samples[i].x);
        let scale = 1e-9 * (1.0 + samples[i].k.abs());
        if before * after < 0.0 || before.abs() <= scale || after.abs() <= scale {
            samples[i].cusp = true;
        }
    }
}
