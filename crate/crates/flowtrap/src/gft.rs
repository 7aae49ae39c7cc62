//! Gradient flow trapping: shrink a certified rectangle around a
//! stationary point by probing value nets on a handful of hyperplane
//! sections per step.
//!
//! The main loop alternates two subroutines. When every face of the
//! current domain is settled at level 0, the `parallel_trap` probes two
//! parallel sections near the short side of the rectangle and cuts away a
//! constant fraction of the volume, leaving one new face certified at
//! level ε. Otherwise `edge_fixing` grows a cascade of three boxes around
//! the pivot; either the cascade finds large value drops and the target
//! face upgrades to level 0, or the first failed drop certifies a shrunken
//! box at a slightly weakened level. Volume falls geometrically either
//! way, and each step costs a constant number of oracle rounds, which is
//! what keeps the total depth logarithmic.

use crate::certificates::{certify_at_level, Domain, FaceCertificate, ProbeResult};
use crate::error::{Error, Result};
use crate::geometry::{build_net, canonicalize_with_threshold, HyperRect, Point};
use crate::oracle::OracleHandle;
use crate::report::AuditRecord;

/// Run constants derived from the target tolerance and dimension.
#[derive(Debug, Clone)]
pub struct GftParams {
    pub eps: f64,
    pub dim: usize,
    /// `K` in the edge-fixing net radius `sqrt(eps' r / K)`
    pub net_factor: f64,
    /// tolerance grows by `1 + growth` on every shrinking edge fix
    pub growth: f64,
    pub step_budget: u64,
}

impl GftParams {
    pub fn new(eps: f64, dim: usize) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.1) || !eps.is_finite() {
            return Err(Error::Invariant(format!(
                "gft requires eps in (0, 0.1], got {eps}"
            )));
        }
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let l = (1.0 / eps).ln();
        if dim <= 2 {
            Ok(Self {
                eps,
                dim,
                net_factor: 500.0 * l,
                growth: 1.0 / (500.0 * l),
                step_budget: 10 * (200.0 * l).ceil() as u64,
            })
        } else {
            // Every shrinking step multiplies the volume by at most 2/3 and
            // the volume stays above (2 eps / (3 sqrt d))^d until the
            // diameter test fires, so the number of shrinks is at most
            // `shrink_cap`. Tolerance escalations happen only on shrinks
            // (each trap resets to eps), hence growth ln2/shrink_cap keeps
            // every intermediate tolerance below 2 eps by construction,
            // and the net factor 0.7 * shrink_cap leaves the fresh shrink
            // certificate a real margin below the escalated level.
            let d = dim as f64;
            let shrink_cap = (d * (3.0 * d.sqrt() / (2.0 * eps)).ln() / 1.5_f64.ln()).ceil();
            let worst_steps =
                (2.0 * d + 1.0) * d * (3.0 * d.sqrt() / (2.0 * eps)).ln() / (1.0 / 0.95_f64).ln();
            Ok(Self {
                eps,
                dim,
                net_factor: 0.7 * shrink_cap,
                growth: std::f64::consts::LN_2 / shrink_cap,
                step_budget: 10 * worst_steps.ceil() as u64,
            })
        }
    }
}

/// Everything the loop carries between steps.
#[derive(Debug, Clone)]
pub struct GftState {
    pub domain: Domain,
    /// faces settled at level 0 (the loop triggers a trap at `2 dim`)
    pub k: usize,
    pub step_index: u64,
}

/// Outcome of one algorithm step.
pub struct StepOutcome {
    pub domain: Domain,
    pub shrunk: bool,
    pub delta: f64,
}

/// One parallel-trap step: probe nets on two parallel sections of the
/// canonical frame and keep the side of the cuts that provably traps the
/// flow. The input must be settled at level 0 on every face; the output is
/// settled at level `eps` with exactly one unsettled face, and loses at
/// least 5% of its volume.
pub fn parallel_trap(h: &OracleHandle, dom: &Domain, eps: f64) -> Result<StepOutcome> {
    let d = dom.dim();
    if !dom.all_p0() {
        return Err(Error::Invariant(
            "parallel trap requires every face settled at level 0".into(),
        ));
    }
    // In the plane the cuts sit at fractions of the short edge, exactly as
    // the analysis sizes them. In higher dimension the same fractions are
    // taken of the longest edge instead: a cut at a short-edge fraction
    // would leave a slab whose aspect ratio can reach 3 times the edge
    // ratio, violating the well-conditioning the next step relies on.
    let scale_by_longest = d >= 3;
    let (transform, crect, cpivot) = canonicalize_with_threshold(&dom.rect, &dom.pivot, |r| {
        if scale_by_longest {
            0.5 * r.longest_edge()
        } else {
            0.5 * r.shortest_edge()
        }
    })?;
    let lambda = if scale_by_longest {
        crect.edge(0)
    } else {
        crect.shortest_edge()
    };
    let s1 = crect.edge(0);
    let delta = (lambda * eps).sqrt();
    let cut_near = lambda / 6.0;
    let cut_far = lambda / 3.0;
    debug_assert!(cpivot.coords()[0] >= 0.5 * lambda - 1e-12);

    // Probe a net on each section, one oracle round per section. Queries
    // go out in the source frame.
    let probe_section = |cut: f64| -> Result<ProbeResult> {
        let section = crect.face_at(0, cut);
        let net = build_net(&section, delta);
        let source_pts: Vec<Point> = net.points.iter().map(|p| transform.backward_point(p)).collect();
        let values = h.batch_query(&source_pts)?;
        let (best, _) = values
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .expect("section nets are never empty");
        Ok(ProbeResult {
            net_min: values[best],
            argmin: source_pts[best].clone(),
            count: source_pts.len(),
            delta,
        })
    };
    let near_probe = probe_section(cut_near)?;
    let far_probe = probe_section(cut_far)?;

    let best_value = near_probe.net_min.min(far_probe.net_min);
    // Pick the surviving slab. The new pivot always sits at distance at
    // least lambda/6 from the one newly created face, whose net was just
    // probed, which is exactly what its level-eps certificate needs.
    let (canon_lo, canon_hi, new_pivot, new_value, fresh_probe) =
        if dom.pivot_value <= best_value {
            (cut_far, s1, dom.pivot.clone(), dom.pivot_value, &far_probe)
        } else if far_probe.net_min <= near_probe.net_min {
            (
                cut_near,
                s1,
                far_probe.argmin.clone(),
                far_probe.net_min,
                &near_probe,
            )
        } else {
            (
                0.0,
                cut_far,
                near_probe.argmin.clone(),
                near_probe.net_min,
                &far_probe,
            )
        };

    let canon_new = crect.intersect_slab(0, canon_lo, canon_hi)?;
    let new_rect = transform.backward_rect(&canon_new)?;
    // which source-frame plane is the new cut
    let cut_canon = if canon_lo == 0.0 { canon_hi } else { canon_lo };
    let (cut_axis, cut_value) = transform.backward_coord(0, cut_canon);

    let old_faces = dom.rect.faces();
    let mut certs = Vec::with_capacity(2 * d);
    for face in new_rect.faces() {
        let distance = face.dist(&new_pivot);
        if face.on_unit_cube_boundary() {
            certs.push(FaceCertificate::boundary(new_value, distance));
            continue;
        }
        if face.axis() == cut_axis && (face.fixed_value() - cut_value).abs() <= crate::GEOM_TOL {
            let cert = certify_at_level(&face, &new_pivot, new_value, eps, fresh_probe)
                .ok_or_else(|| Error::Invariant("trap cut certificate failed".into()))?;
            certs.push(cert);
            continue;
        }
        let inherited = old_faces
            .iter()
            .position(|old| old.same_plane(&face))
            .and_then(|j| dom.face_certs[j].inherit(new_value, distance));
        match inherited {
            Some(cert) => certs.push(cert),
            None => {
                return Err(Error::Invariant(
                    "trap failed to inherit a settled face".into(),
                ))
            }
        }
    }

    let out = Domain::new(new_rect, new_pivot, new_value, certs, eps)?;
    debug_assert!(out.rect.vol() / dom.rect.vol() <= 0.95 + 1e-12);
    debug_assert!(out.rect.aspect_ratio() <= 3.0 + 1e-9);
    debug_assert_eq!(out.p0_count(), 2 * d - 1);
    Ok(StepOutcome {
        domain: out,
        shrunk: true,
        delta,
    })
}

/// Net minima over the whole boundary of one cascade box, all faces in a
/// single oracle round.
struct BoundaryProbe {
    per_face: Vec<ProbeResult>,
    best_value: f64,
    best_point: Point,
}

fn probe_boundary(h: &OracleHandle, rect: &HyperRect, delta: f64) -> Result<BoundaryProbe> {
    let faces = rect.faces();
    let mut all_points = Vec::new();
    let mut ranges = Vec::with_capacity(faces.len());
    for face in &faces {
        let net = build_net(face, delta);
        let start = all_points.len();
        all_points.extend(net.points);
        ranges.push(start..all_points.len());
    }
    let values = h.batch_query(&all_points)?;
    let mut per_face = Vec::with_capacity(faces.len());
    let mut best = (f64::INFINITY, 0usize);
    for range in ranges {
        let (idx, _) = values[range.clone()]
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .expect("face nets are never empty");
        let abs_idx = range.start + idx;
        per_face.push(ProbeResult {
            net_min: values[abs_idx],
            argmin: all_points[abs_idx].clone(),
            count: range.len(),
            delta,
        });
        if values[abs_idx] < best.0 {
            best = (values[abs_idx], abs_idx);
        }
    }
    Ok(BoundaryProbe {
        per_face,
        best_value: best.0,
        best_point: all_points[best.1].clone(),
    })
}

/// One edge-fixing step. Targets the closest face that is not yet settled
/// at level 0 and runs the three-box cascade around the pivot. Without a
/// shrink the target face upgrades to level 0 and everything else
/// transfers; with a shrink the output box keeps at most 2/3 of the volume
/// at a level weakened by the per-shrink growth factor.
pub fn edge_fixing(
    h: &OracleHandle,
    dom: &Domain,
    params: &GftParams,
) -> Result<StepOutcome> {
    let d = dom.dim();
    let faces = dom.rect.faces();
    let target = faces
        .iter()
        .enumerate()
        .filter(|(i, _)| !dom.face_certs[*i].is_p0())
        .min_by(|(_, a), (_, b)| {
            a.dist(&dom.pivot)
                .partial_cmp(&b.dist(&dom.pivot))
                .unwrap()
        })
        .map(|(i, _)| i);
    let target = target.ok_or_else(|| {
        Error::Invariant("edge fixing called with every face already settled".into())
    })?;
    let eps_t = dom.epsilon_t;
    let r = faces[target].dist(&dom.pivot);
    if r <= 0.0 {
        return Err(Error::Invariant("pivot sits on the target face".into()));
    }
    let delta = (eps_t * r / params.net_factor).sqrt();
    let drop_needed = eps_t * r / 3.0;

    let mut pivots = vec![(dom.pivot.clone(), dom.pivot_value)];
    for phase in 1..=3usize {
        let (center, center_value) = pivots.last().cloned().unwrap();
        let cascade_rect = dom.rect.intersect_inf_ball(&center, r / 3.0)?;
        let probe = probe_boundary(h, &cascade_rect, delta)?;

        if probe.best_value <= center_value - drop_needed {
            pivots.push((probe.best_point, probe.best_value));
            continue;
        }

        // Improvement failed: certify the cascade box around the previous
        // pivot at the weakened level and shrink.
        let new_level = (1.0 + params.growth) * eps_t;
        let mut certs = Vec::with_capacity(2 * d);
        for (face, face_probe) in cascade_rect.faces().iter().zip(&probe.per_face) {
            let distance = face.dist(&center);
            if face.on_unit_cube_boundary() {
                certs.push(FaceCertificate::boundary(center_value, distance));
                continue;
            }
            // Faces borrowed from the surrounding rectangle are settled
            // (they are closer to the original pivot than the target face
            // was); fresh cut faces certify from this round's nets.
            let inherited = faces
                .iter()
                .position(|old| old.same_plane(face))
                .and_then(|j| dom.face_certs[j].inherit(center_value, distance));
            if let Some(cert) = inherited {
                certs.push(cert);
                continue;
            }
            match certify_at_level(face, &center, center_value, new_level, face_probe) {
                Some(cert) => certs.push(cert),
                None => {
                    return Err(Error::Invariant(format!(
                        "edge fixing phase {phase}: cut face failed to certify"
                    )))
                }
            }
        }
        let out = Domain::new(cascade_rect, center, center_value, certs, new_level)?;
        debug_assert!(out.rect.vol() / dom.rect.vol() <= 2.0 / 3.0 + 1e-12);
        debug_assert!(out.rect.aspect_ratio() <= 3.0 + 1e-9);
        return Ok(StepOutcome {
            domain: out,
            shrunk: true,
            delta,
        });
    }

    // All three drops held: the pivot moved far down in value, the target
    // face is now settled at level 0, and every other certificate
    // transfers by the triangle inequality.
    let (new_pivot, new_value) = pivots.last().cloned().unwrap();
    let mut certs = Vec::with_capacity(2 * d);
    for (i, face) in faces.iter().enumerate() {
        let distance = face.dist(&new_pivot);
        let cert = if i == target {
            dom.face_certs[i].upgrade_to_p0(new_value, distance)
        } else {
            dom.face_certs[i].inherit(new_value, distance)
        };
        match cert {
            Some(c) => certs.push(c),
            None => {
                return Err(Error::Invariant(format!(
                    "edge fixing: certificate {i} failed to transfer to the cascade pivot"
                )))
            }
        }
    }
    let out = Domain::new(dom.rect.clone(), new_pivot, new_value, certs, eps_t)?;
    debug_assert_eq!(out.p0_count(), dom.p0_count() + 1);
    Ok(StepOutcome {
        domain: out,
        shrunk: false,
        delta,
    })
}

/// The result of a full run.
pub struct GftRun {
    pub point: Point,
    pub steps: u64,
    pub audit: Vec<AuditRecord>,
}

/// Run gradient flow trapping to completion: starting from the unit cube
/// with the center pivot, alternate the two subroutines until the domain
/// diameter drops to `2 eps`. The returned pivot is then `4 eps`-
/// stationary: the final domain traps a `2 eps`-stationary point within
/// distance `2 eps` of the pivot.
pub fn run_gft(h: &OracleHandle, eps: f64, dim: usize) -> Result<GftRun> {
    let params = GftParams::new(eps, dim)?;
    if h.dimension() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: h.dimension(),
        });
    }
    let center = HyperRect::unit_cube(dim).center();
    let pivot_value = h.query(&center)?;
    let mut state = GftState {
        domain: Domain::initial_cube(dim, center, pivot_value, eps),
        k: 2 * dim,
        step_index: 0,
    };
    let mut audit = vec![state
        .domain
        .audit_record(0, "init", 0.0, h.ledger().snapshot())];

    while state.domain.rect.diam() > 2.0 * eps {
        if state.step_index >= params.step_budget {
            return Err(Error::StepBudgetExceeded {
                budget: params.step_budget,
                steps: state.step_index,
                context: format!("gft d={dim} eps={eps}; audit has {} records", audit.len()),
            });
        }
        let doing_trap = state.domain.all_p0();
        let outcome = if doing_trap {
            parallel_trap(h, &state.domain, eps)?
        } else {
            edge_fixing(h, &state.domain, &params)?
        };
        let subroutine = if doing_trap {
            "parallel_trap"
        } else {
            "edge_fixing"
        };
        state.step_index += 1;
        state.domain = outcome.domain;
        state.k = state.domain.p0_count();
        if state.domain.epsilon_t > 2.0 * eps * (1.0 + 1e-12) {
            return Err(Error::Invariant(format!(
                "tolerance escalated past 2 eps: {}",
                state.domain.epsilon_t
            )));
        }
        if !state.domain.pivot_off_interior_faces() {
            return Err(Error::Invariant(
                "pivot landed on an interior face".into(),
            ));
        }
        audit.push(state.domain.audit_record(
            state.step_index,
            subroutine,
            outcome.delta,
            h.ledger().snapshot(),
        ));
    }

    Ok(GftRun {
        point: state.domain.pivot.clone(),
        steps: state.step_index,
        audit,
    })
}
