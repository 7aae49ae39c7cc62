//! Cut and flow: alternate midpoint bisection with plain projected
//! gradient descent, keeping a level-0 certificate on every face of the
//! surviving half.
//!
//! The bisection queries one δ-net on the shared face; the descent runs
//! enough unit-step iterations that the pivot value drops below the net
//! minimum by more than the discretization error, unless it stumbles on an
//! ε-stationary point first. Descent is inherently serial, so this
//! algorithm trades the logarithmic depth of trapping for a smaller total
//! query count in moderate dimension.

use crate::certificates::{certify, probe_face, Domain, FaceCertificate, ProbeResult};
use crate::error::{Error, Result};
use crate::geometry::{HyperRect, Point};
use crate::oracle::{norm, OracleHandle};
use crate::report::AuditRecord;

#[derive(Debug, Clone)]
pub struct CfParams {
    pub eps: f64,
    pub dim: usize,
    /// nominal net radius `2 d eps^(2/(d+1))`, clamped per face to its
    /// diameter when probing
    pub delta: f64,
    /// descent iterations per outer step, `ceil(delta^2 / eps^2)`
    pub descent_steps: u64,
    pub outer_budget: u64,
}

impl CfParams {
    pub fn new(eps: f64, dim: usize) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.1) || !eps.is_finite() {
            return Err(Error::Invariant(format!(
                "cf requires eps in (0, 0.1], got {eps}"
            )));
        }
        let d = dim as f64;
        let delta = 2.0 * d * eps.powf(2.0 / (d + 1.0));
        // T = delta^2/eps^2, rounded up; snap to the integer when the
        // float dirt of powf lands within a relative 1e-9 of one
        let t_exact = delta * delta / (eps * eps);
        let descent_steps = if (t_exact - t_exact.round()).abs() <= 1e-9 * t_exact.round().max(1.0)
        {
            t_exact.round() as u64
        } else {
            t_exact.ceil() as u64
        };
        let outer_budget = 10 * (d * (d.sqrt() / eps).log2()).ceil() as u64;
        Ok(Self {
            eps,
            dim,
            delta,
            descent_steps,
            outer_budget,
        })
    }

    /// Outer steps until the diameter halves `log2(sqrt(d)/eps)` times.
    pub fn expected_outer_steps(&self) -> u64 {
        let d = self.dim as f64;
        (d * (d.sqrt() / self.eps).log2()).ceil() as u64
    }
}

/// Result of the bisection half-step.
pub struct Bisection {
    pub low_half: HyperRect,
    pub high_half: HyperRect,
    pub split_axis: usize,
    pub midpoint: f64,
    pub probe: ProbeResult,
    pub pivot_bar: Point,
    pub pivot_bar_value: f64,
}

/// Split the domain at the midpoint of a longest axis (lowest index on
/// ties) and probe a δ-net on the shared face. The better of the current
/// pivot and the net minimizer becomes the descent start.
pub fn bisection_step(h: &OracleHandle, dom: &Domain, params: &CfParams) -> Result<Bisection> {
    let rect = &dom.rect;
    let split_axis = (0..rect.dim())
        .max_by(|&a, &b| rect.edge(a).partial_cmp(&rect.edge(b)).unwrap())
        .expect("rectangles are non-empty");
    // max_by returns the last maximum; rescan for the lowest tied index
    let split_axis = (0..rect.dim())
        .find(|&a| rect.edge(a) >= rect.edge(split_axis) - crate::GEOM_TOL)
        .unwrap();
    let midpoint = 0.5 * (rect.lo()[split_axis] + rect.hi()[split_axis]);
    let low_half = rect.intersect_slab(split_axis, rect.lo()[split_axis], midpoint)?;
    let high_half = rect.intersect_slab(split_axis, midpoint, rect.hi()[split_axis])?;
    let shared = rect.face_at(split_axis, midpoint);
    let delta = params.delta.min(shared.diam());
    let probe = probe_face(h, &shared, delta)?;
    let (pivot_bar, pivot_bar_value) = if dom.pivot_value <= probe.net_min {
        (dom.pivot.clone(), dom.pivot_value)
    } else {
        (probe.argmin.clone(), probe.net_min)
    };
    Ok(Bisection {
        low_half,
        high_half,
        split_axis,
        midpoint,
        probe,
        pivot_bar,
        pivot_bar_value,
    })
}

/// What the descent half-step produced.
pub enum DescentOutcome {
    /// an iterate passed the stationarity test before the budget ran out
    FoundStationary(Point),
    /// the full iteration count ran and the surviving half certifies
    NewDomain(Domain),
}

/// Run the projected gradient descent phase from the bisection's pivot.
/// Iterates use step size 1 with clamping to the cube; each one costs a
/// single gradient query that doubles as the early stationarity test.
pub fn descent_step(
    h: &OracleHandle,
    dom: &Domain,
    bis: &Bisection,
    params: &CfParams,
) -> Result<DescentOutcome> {
    let eps = params.eps;
    let mut x = bis.pivot_bar.clone();
    let mut iterations = 0u64;
    loop {
        let g = h.projected_gradient(&x)?;
        if norm(&g) <= eps {
            return Ok(DescentOutcome::FoundStationary(x));
        }
        if iterations >= params.descent_steps {
            break;
        }
        x = Point::clamped(
            x.coords()
                .iter()
                .zip(&g)
                .map(|(c, gi)| c - gi)
                .collect(),
        );
        iterations += 1;
    }

    // After T unit steps the accumulated decrease beats the net error, so
    // the shared face certifies at level 0 against the final iterate. A
    // clamped step can in principle fall short of the textbook eps^2/2
    // decrease, so verify directly and keep descending if needed.
    let mut value = h.query(&x)?;
    while !crate::report::pc_inequality_holds(value, bis.probe.net_min, bis.probe.delta, 0.0, 0.0)
    {
        if iterations >= 10 * params.descent_steps {
            return Err(Error::StepBudgetExceeded {
                budget: 10 * params.descent_steps,
                steps: iterations,
                context: "cf descent could not settle the shared face".into(),
            });
        }
        let g = h.projected_gradient(&x)?;
        if norm(&g) <= eps {
            return Ok(DescentOutcome::FoundStationary(x));
        }
        x = Point::clamped(
            x.coords()
                .iter()
                .zip(&g)
                .map(|(c, gi)| c - gi)
                .collect(),
        );
        iterations += 1;
        value = h.query(&x)?;
    }

    // the final iterate selects the surviving half; ties go low
    let half = if bis.low_half.contains(&x, 0.0) {
        &bis.low_half
    } else {
        &bis.high_half
    };
    let old_faces = dom.rect.faces();
    let mut certs = Vec::with_capacity(2 * half.dim());
    for face in half.faces() {
        let distance = face.dist(&x);
        if face.on_unit_cube_boundary() {
            certs.push(FaceCertificate::boundary(value, distance));
            continue;
        }
        if face.axis() == bis.split_axis
            && (face.fixed_value() - bis.midpoint).abs() <= crate::GEOM_TOL
        {
            let cert = certify(&face, &x, value, 0.0, &bis.probe).ok_or_else(|| {
                Error::Invariant("cf shared-face certificate failed after descent".into())
            })?;
            certs.push(cert);
            continue;
        }
        let inherited = old_faces
            .iter()
            .position(|old| old.same_plane(&face))
            .and_then(|j| dom.face_certs[j].inherit(value, distance));
        match inherited {
            Some(cert) => certs.push(cert),
            None => {
                return Err(Error::Invariant(
                    "cf failed to inherit a settled face".into(),
                ))
            }
        }
    }
    Ok(DescentOutcome::NewDomain(Domain::new(
        half.clone(),
        x,
        value,
        certs,
        0.0,
    )?))
}

pub struct CfRun {
    pub point: Point,
    pub steps: u64,
    pub early_exit: bool,
    pub audit: Vec<AuditRecord>,
}

/// Run cut and flow from the unit cube until the domain diameter drops to
/// `eps` or an iterate tests stationary. The returned point is
/// ε-stationary: a level-0 trapped point sits within `eps` of it.
pub fn run_cf(h: &OracleHandle, eps: f64, dim: usize) -> Result<CfRun> {
    let params = CfParams::new(eps, dim)?;
    if h.dimension() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: h.dimension(),
        });
    }
    let center = HyperRect::unit_cube(dim).center();
    let pivot_value = h.query(&center)?;
    let mut dom = Domain::initial_cube(dim, center, pivot_value, 0.0);
    let mut audit = vec![dom.audit_record(0, "init", 0.0, h.ledger().snapshot())];
    let mut steps = 0u64;

    while dom.rect.diam() > eps {
        if steps >= params.outer_budget {
            return Err(Error::StepBudgetExceeded {
                budget: params.outer_budget,
                steps,
                context: format!("cf d={dim} eps={eps}"),
            });
        }
        let bis = bisection_step(h, &dom, &params)?;
        steps += 1;
        match descent_step(h, &dom, &bis, &params)? {
            DescentOutcome::FoundStationary(point) => {
                audit.push(dom.audit_record(
                    steps,
                    "cf_found_stationary",
                    bis.probe.delta,
                    h.ledger().snapshot(),
                ));
                return Ok(CfRun {
                    point,
                    steps,
                    early_exit: true,
                    audit,
                });
            }
            DescentOutcome::NewDomain(next) => {
                dom = next;
                audit.push(dom.audit_record(
                    steps,
                    "cf_bisect_descend",
                    bis.probe.delta,
                    h.ledger().snapshot(),
                ));
            }
        }
    }

    Ok(CfRun {
        point: dom.pivot.clone(),
        steps,
        early_exit: false,
        audit,
    })
}
