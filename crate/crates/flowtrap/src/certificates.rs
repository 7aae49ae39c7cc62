//! Face certificates and domain state.
//!
//! A pair (rectangle, pivot) traps the constrained gradient flow at level
//! `c` when every face either lies on the cube boundary or carries a
//! recorded inequality
//!
//! ```text
//! f(pivot) < net_min - delta^2/8 + c * dist(pivot, face)
//! ```
//!
//! where `net_min` is the minimum of `f` over a queried δ-net of the face.
//! The net minimum can only under-estimate the best achievable net value,
//! so a certificate built from it is conservative: if it holds, the flow
//! from the pivot reaches a `c`-stationary point before it can leave the
//! rectangle. Certificates store every number appearing in the inequality
//! (including the pivot value), which is what makes the audit trail
//! replayable without re-querying the oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_net, Face, HyperRect, Point};
use crate::oracle::OracleHandle;
use crate::report::{pc_inequality_holds, AuditRecord, FaceRecord, LedgerSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertStatus {
    /// level-0 inequality holds: the face value exceeds the pivot value by
    /// more than the discretization error
    P0,
    /// inequality holds at the recorded positive level
    Pc,
    /// face lies inside the boundary of the unit cube; certificate-free
    BoundaryFace,
}

/// Evidence that a face satisfies the trapping property with respect to a
/// pivot. Immutable; pivot moves produce new certificates via [`FaceCertificate::inherit`].
#[derive(Debug, Clone)]
pub struct FaceCertificate {
    pub status: CertStatus,
    pub level_c: f64,
    pub delta: f64,
    pub net_min: f64,
    pub net_argmin: Option<Point>,
    /// pivot-to-face distance at certification time
    pub distance: f64,
    /// pivot value at certification time
    pub pivot_value: f64,
}

impl FaceCertificate {
    pub fn boundary(pivot_value: f64, distance: f64) -> Self {
        Self {
            status: CertStatus::BoundaryFace,
            level_c: 0.0,
            delta: 0.0,
            net_min: 0.0,
            net_argmin: None,
            distance,
            pivot_value,
        }
    }

    /// Counts toward the "all faces trapped at level 0" precondition of
    /// the parallel trap.
    pub fn is_p0(&self) -> bool {
        matches!(self.status, CertStatus::P0 | CertStatus::BoundaryFace)
    }

    /// Transfer a certificate to a new pivot. Level-0 certificates move
    /// whenever the pivot value did not increase; positive-level
    /// certificates move when the value drop pays for the lost distance
    /// (the triangle-inequality transfer). Returns `None` when the
    /// transfer is not justified; that is an expected outcome, not an
    /// error.
    pub fn inherit(&self, new_pivot_value: f64, new_distance: f64) -> Option<Self> {
        let ok = match self.status {
            CertStatus::BoundaryFace => true,
            CertStatus::P0 => new_pivot_value <= self.pivot_value,
            CertStatus::Pc => {
                new_pivot_value + self.level_c * (self.distance - new_distance)
                    <= self.pivot_value
            }
        };
        ok.then(|| Self {
            distance: new_distance,
            pivot_value: new_pivot_value,
            ..self.clone()
        })
    }

    /// Re-examine the recorded net data against a (lower) pivot value; if
    /// the level-0 inequality now holds the certificate upgrades. This is
    /// how edge fixing turns its target face into a settled one.
    pub fn upgrade_to_p0(&self, new_pivot_value: f64, new_distance: f64) -> Option<Self> {
        if self.status == CertStatus::BoundaryFace {
            return Some(Self {
                pivot_value: new_pivot_value,
                distance: new_distance,
                ..self.clone()
            });
        }
        pc_inequality_holds(new_pivot_value, self.net_min, self.delta, 0.0, 0.0).then(|| Self {
            status: CertStatus::P0,
            level_c: 0.0,
            distance: new_distance,
            pivot_value: new_pivot_value,
            ..self.clone()
        })
    }
}

/// Outcome of probing one face: the net minimum is a sound stand-in for
/// the best net value of the face, and by the discretization lemma it
/// overshoots the true face minimum by at most `delta^2 / 8`.
#[derive(Debug, Clone)]
pub struct ProbeResult {
    pub net_min: f64,
    pub argmin: Point,
    pub count: usize,
    pub delta: f64,
}

/// Build the canonical δ-net of the face and query it in a single round.
pub fn probe_face(h: &OracleHandle, face: &Face, delta: f64) -> Result<ProbeResult> {
    let net = build_net(face, delta);
    let values = h.batch_query(&net.points)?;
    let (best, _) = values
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
        .expect("nets are never empty");
    Ok(ProbeResult {
        net_min: values[best],
        argmin: net.points[best].clone(),
        count: net.points.len(),
        delta,
    })
}

/// Certify one face against a candidate pivot: faces on the cube boundary
/// pass for free, otherwise prefer the level-0 inequality and fall back to
/// level `c`. `None` means certification failed and the caller decides.
pub fn certify(
    face: &Face,
    pivot: &Point,
    pivot_value: f64,
    c: f64,
    probe: &ProbeResult,
) -> Option<FaceCertificate> {
    let distance = face.dist(pivot);
    if face.on_unit_cube_boundary() {
        return Some(FaceCertificate::boundary(pivot_value, distance));
    }
    if pc_inequality_holds(pivot_value, probe.net_min, probe.delta, 0.0, 0.0) {
        return Some(FaceCertificate {
            status: CertStatus::P0,
            level_c: 0.0,
            delta: probe.delta,
            net_min: probe.net_min,
            net_argmin: Some(probe.argmin.clone()),
            distance,
            pivot_value,
        });
    }
    certify_at_level(face, pivot, pivot_value, c, probe)
}

/// Certify one face at exactly the stated positive level, never
/// upgrading. The trapping subroutines record their fresh cut faces this
/// way: the level is part of the step's contract, and the later
/// edge-fixing pass is what earns the upgrade to level 0.
pub fn certify_at_level(
    face: &Face,
    pivot: &Point,
    pivot_value: f64,
    c: f64,
    probe: &ProbeResult,
) -> Option<FaceCertificate> {
    let distance = face.dist(pivot);
    if face.on_unit_cube_boundary() {
        return Some(FaceCertificate::boundary(pivot_value, distance));
    }
    pc_inequality_holds(pivot_value, probe.net_min, probe.delta, c, distance).then(|| {
        FaceCertificate {
            status: CertStatus::Pc,
            level_c: c,
            delta: probe.delta,
            net_min: probe.net_min,
            net_argmin: Some(probe.argmin.clone()),
            distance,
            pivot_value,
        }
    })
}

/// A rectangle, its pivot, and one certificate per face (in the order of
/// [`HyperRect::faces`]). Domains are immutable snapshots; every algorithm
/// step builds a fresh one.
#[derive(Debug, Clone)]
pub struct Domain {
    pub rect: HyperRect,
    pub pivot: Point,
    pub pivot_value: f64,
    pub face_certs: Vec<FaceCertificate>,
    pub epsilon_t: f64,
}

impl Domain {
    /// The starting domain of every run: the unit cube with all faces on
    /// the cube boundary, so the trapping property holds vacuously at
    /// every level.
    pub fn initial_cube(dim: usize, pivot: Point, pivot_value: f64, eps: f64) -> Self {
        let rect = HyperRect::unit_cube(dim);
        let face_certs = rect
            .faces()
            .iter()
            .map(|f| FaceCertificate::boundary(pivot_value, f.dist(&pivot)))
            .collect();
        Self {
            rect,
            pivot,
            pivot_value,
            face_certs,
            epsilon_t: eps,
        }
    }

    pub fn new(
        rect: HyperRect,
        pivot: Point,
        pivot_value: f64,
        face_certs: Vec<FaceCertificate>,
        epsilon_t: f64,
    ) -> Result<Self> {
        if face_certs.len() != 2 * rect.dim() {
            return Err(Error::Invariant(format!(
                "expected {} face certificates, got {}",
                2 * rect.dim(),
                face_certs.len()
            )));
        }
        if !rect.contains(&pivot, crate::GEOM_TOL) {
            return Err(Error::Invariant("pivot outside rectangle".into()));
        }
        Ok(Self {
            rect,
            pivot,
            pivot_value,
            face_certs,
            epsilon_t,
        })
    }

    pub fn dim(&self) -> usize {
        self.rect.dim()
    }

    /// Number of faces settled at level 0 (including cube-boundary faces).
    pub fn p0_count(&self) -> usize {
        self.face_certs.iter().filter(|c| c.is_p0()).count()
    }

    pub fn all_p0(&self) -> bool {
        self.p0_count() == 2 * self.dim()
    }

    /// The pivot of a certified domain never lies on a face that the
    /// algorithm manufactured (as opposed to the cube boundary).
    pub fn pivot_off_interior_faces(&self) -> bool {
        self.rect
            .faces()
            .iter()
            .all(|f| f.on_unit_cube_boundary() || f.dist(&self.pivot) > 0.0)
    }

    pub fn audit_record(
        &self,
        step: u64,
        subroutine: &str,
        delta: f64,
        ledger: LedgerSnapshot,
    ) -> AuditRecord {
        let faces = self
            .rect
            .faces()
            .iter()
            .zip(&self.face_certs)
            .map(|(face, cert)| FaceRecord {
                axis: face.axis(),
                fixed_value: face.fixed_value(),
                face_lo: face.lo().to_vec(),
                face_hi: face.hi().to_vec(),
                on_cube_boundary: face.on_unit_cube_boundary(),
                status: cert.status,
                level_c: cert.level_c,
                delta: cert.delta,
                net_min: cert.net_min,
                distance: cert.distance,
                pivot_value: cert.pivot_value,
            })
            .collect();
        AuditRecord {
            step,
            subroutine: subroutine.to_string(),
            rect_lo: self.rect.lo().to_vec(),
            rect_hi: self.rect.hi().to_vec(),
            pivot: self.pivot.coords().to_vec(),
            pivot_value: self.pivot_value,
            epsilon_t: self.epsilon_t,
            p0_count: self.p0_count(),
            delta,
            faces,
            ledger,
        }
    }
}
