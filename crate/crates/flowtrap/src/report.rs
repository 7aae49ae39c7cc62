//! Run reports and the JSON-lines audit trail shared by all algorithms.

use serde::{Deserialize, Serialize};

use crate::certificates::CertStatus;
use crate::error::{Error, Result};
use crate::geometry::{HyperRect, Point};
use crate::GEOM_TOL;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerSnapshot {
    pub value_queries: u64,
    pub gradient_queries: u64,
    pub depth_rounds: u64,
}

/// One face certificate as recorded in the audit trail. Carries every
/// number needed to replay the defining inequality without re-querying.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaceRecord {
    pub axis: usize,
    pub fixed_value: f64,
    pub face_lo: Vec<f64>,
    pub face_hi: Vec<f64>,
    pub on_cube_boundary: bool,
    pub status: CertStatus,
    pub level_c: f64,
    pub delta: f64,
    pub net_min: f64,
    pub distance: f64,
    pub pivot_value: f64,
}

/// One record per domain-producing step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditRecord {
    pub step: u64,
    pub subroutine: String,
    pub rect_lo: Vec<f64>,
    pub rect_hi: Vec<f64>,
    pub pivot: Vec<f64>,
    pub pivot_value: f64,
    pub epsilon_t: f64,
    pub p0_count: usize,
    /// net radius used by this step (0 when no net was probed)
    pub delta: f64,
    pub faces: Vec<FaceRecord>,
    pub ledger: LedgerSnapshot,
}

/// Final outcome of one algorithm execution.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub algorithm: String,
    pub function: String,
    pub dim: usize,
    pub eps: f64,
    pub point: Vec<f64>,
    /// independently recomputed projected-gradient norm at `point`
    pub proj_grad_norm: f64,
    /// the level the algorithm promises (`4 eps` for gft, `eps` otherwise)
    pub claim_level: f64,
    pub verified: bool,
    pub value_queries: u64,
    pub gradient_queries: u64,
    pub depth: u64,
    pub steps: u64,
    pub wall_time_ms: u64,
    #[serde(skip)]
    pub audit: Vec<AuditRecord>,
}

impl RunReport {
    pub fn total_queries(&self) -> u64 {
        self.value_queries + self.gradient_queries
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.function,
            self.dim,
            self.eps,
            self.value_queries,
            self.gradient_queries,
            self.depth,
            self.steps,
            self.proj_grad_norm,
            self.wall_time_ms
        )
    }
}

pub const CSV_HEADER: &str =
    "algo,fn,d,eps,queries_value,queries_grad,depth,steps,proj_grad_norm,wall_ms";

/// The exact strict inequality a certificate claims. Both certification
/// and audit replay go through this single function so a replay reproduces
/// the original comparison bit for bit.
pub fn pc_inequality_holds(
    pivot_value: f64,
    net_min: f64,
    delta: f64,
    level_c: f64,
    distance: f64,
) -> bool {
    pivot_value < net_min - delta * delta / 8.0 + level_c * distance
}

/// Replay every certificate of every record: the recorded numbers must
/// reproduce the defining inequality, and the pivot must stay strictly off
/// all faces that are not part of the cube boundary.
pub fn replay_audit(records: &[AuditRecord]) -> Result<()> {
    for rec in records {
        let rect = HyperRect::new(rec.rect_lo.clone(), rec.rect_hi.clone())?;
        let pivot = Point::new(rec.pivot.clone())?;
        if !rect.contains(&pivot, GEOM_TOL) {
            return Err(Error::Invariant(format!(
                "step {}: pivot left the rectangle",
                rec.step
            )));
        }
        let settled = rec
            .faces
            .iter()
            .filter(|f| matches!(f.status, CertStatus::P0 | CertStatus::BoundaryFace))
            .count();
        if settled != rec.p0_count {
            return Err(Error::Invariant(format!(
                "step {}: recorded p0_count {} but statuses recount to {settled}",
                rec.step, rec.p0_count
            )));
        }
        for (idx, face) in rec.faces.iter().enumerate() {
            let holds = match face.status {
                CertStatus::BoundaryFace => {
                    face.on_cube_boundary
                        && (face.fixed_value.abs() <= GEOM_TOL
                            || (face.fixed_value - 1.0).abs() <= GEOM_TOL)
                }
                CertStatus::P0 => {
                    pc_inequality_holds(face.pivot_value, face.net_min, face.delta, 0.0, 0.0)
                }
                CertStatus::Pc => pc_inequality_holds(
                    face.pivot_value,
                    face.net_min,
                    face.delta,
                    face.level_c,
                    face.distance,
                ),
            };
            if !holds {
                return Err(Error::Invariant(format!(
                    "step {}: face {idx} fails its {:?} inequality on replay",
                    rec.step, face.status
                )));
            }
            // Lemma-style interiority: the pivot never sits on a face that
            // was created by the algorithm rather than the cube boundary.
            if !face.on_cube_boundary {
                let geo_face = rect.face_at(face.axis, face.fixed_value);
                if geo_face.dist(&pivot) <= 0.0 {
                    return Err(Error::Invariant(format!(
                        "step {}: pivot lies on interior face {idx}",
                        rec.step
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Serialize records as JSON lines.
pub fn audit_to_jsonl(records: &[AuditRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("audit record serializes"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parse a JSON-lines audit dump.
pub fn audit_from_jsonl(text: &str) -> Result<Vec<AuditRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| Error::Invariant(format!("bad audit line: {e}")))
        })
        .collect()
}
