//! The two cleaning stages.
//!
//! Stage 1 keeps archive content (mementos and TimeMaps) and robots.txt
//! requests. Stage 2 runs after robot detection and keeps only what a user
//! navigates to: GET requests answered with 200, 404 or 503 that are not
//! embedded resources and not robots.txt.

use serde::{Deserialize, Serialize};

use crate::archive::{ArchiveRequest, RequestKind};
use crate::entry::Method;
use crate::ratio::Ratio;

pub const STAGE2_STATUSES: [u16; 3] = [200, 404, 503];

pub fn stage1_keep(request: &ArchiveRequest) -> bool {
    matches!(request.kind, RequestKind::Memento | RequestKind::Timemap | RequestKind::RobotsTxt)
}

pub fn stage2_keep(request: &ArchiveRequest) -> bool {
    stage1_keep(request)
        && request.kind != RequestKind::RobotsTxt
        && request.entry.method == Method::Get
        && STAGE2_STATUSES.contains(&request.entry.status)
        && !request.is_embedded
}

/// Request counts before and after each stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CleaningStats {
    pub raw_count: u64,
    pub s1_count: u64,
    pub s2_count: u64,
}

impl CleaningStats {
    pub fn s1(&self) -> Ratio {
        Ratio::new(self.s1_count, self.raw_count)
    }

    pub fn s2(&self) -> Ratio {
        Ratio::new(self.s2_count, self.raw_count)
    }

    pub fn merge(&mut self, other: &CleaningStats) {
        self.raw_count += other.raw_count;
        self.s1_count += other.s1_count;
        self.s2_count += other.s2_count;
    }

    pub fn is_consistent(&self) -> bool {
        self.s2_count <= self.s1_count && self.s1_count <= self.raw_count
    }
}
