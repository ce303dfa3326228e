use serde::{Deserialize, Serialize};

/// Symmetry class of a branch; selects the phase conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    Trivial,
    Pearling,
    Wrinkling,
    Coiling,
    Buckling,
    /// Secondary branches without a known symmetry.
    Generic,
}

/// Linearized rigid-motion constraints ⟨M·tᵢ, u⟩ = 0. Translations in y and
/// z are always active; x-translation and x-rotation are added per symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseConditions {
    pub translate_x: bool,
    pub rotate_x: bool,
}

pub const PHASE_LABELS: [&str; 4] = ["translate_y", "translate_z", "translate_x", "rotate_x"];

impl PhaseConditions {
    pub fn for_kind(kind: BranchKind) -> Self {
        let (translate_x, rotate_x) = match kind {
            BranchKind::Trivial => (false, false),
            BranchKind::Pearling | BranchKind::Coiling => (true, false),
            BranchKind::Wrinkling => (false, true),
            BranchKind::Buckling | BranchKind::Generic => (true, true),
        };
        Self { translate_x, rotate_x }
    }

    /// Indices into `Frame::rigid_fields`, in multiplier order.
    pub fn active(&self) -> Vec<usize> {
        let mut a = vec![0, 1];
        if self.translate_x {
            a.push(2);
        }
        if self.rotate_x {
            a.push(3);
        }
        a
    }

    pub fn labels(&self) -> Vec<&'static str> {
        self.active().into_iter().map(|i| PHASE_LABELS[i]).collect()
    }
}
