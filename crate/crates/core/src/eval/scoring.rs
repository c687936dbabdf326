use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Lines that are non-blank after trimming. Comment lines count.
pub fn count_loc(code: &str) -> usize {
    code.lines().filter(|l| !l.trim().is_empty()).count()
}

/// One requirement checked on one updated file: 1 if it works, 0 if not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementResult {
    pub requirement_id: String,
    value: u8,
}

impl RequirementResult {
    pub fn new(requirement_id: impl Into<String>, value: u8) -> Result<Self, EvalError> {
        if value > 1 {
            return Err(EvalError::NonBinaryRequirement(value));
        }
        Ok(Self {
            requirement_id: requirement_id.into(),
            value,
        })
    }

    pub fn passed(requirement_id: impl Into<String>, passed: bool) -> Self {
        Self {
            requirement_id: requirement_id.into(),
            value: u8::from(passed),
        }
    }

    pub fn value(&self) -> u8 {
        self.value
    }
}

pub fn score_requirements(results: &[RequirementResult]) -> Result<u32, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(results.iter().map(|r| u32::from(r.value)).sum())
}

/// The three per-file quality marks. They are assessed independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CheckMarks {
    /// All necessary updates are there and the code looks right.
    pub updates_present_and_plausible: bool,
    /// Basic functions work without errors.
    pub basic_functions_ok: bool,
    /// Every updated requirement is fully correct.
    pub all_requirements_correct: bool,
}

impl CheckMarks {
    pub fn new(first: bool, second: bool, third: bool) -> Self {
        Self {
            updates_present_and_plausible: first,
            basic_functions_ok: second,
            all_requirements_correct: third,
        }
    }

    pub fn flags(&self) -> [bool; 3] {
        [
            self.updates_present_and_plausible,
            self.basic_functions_ok,
            self.all_requirements_correct,
        ]
    }
}

pub fn score_checkmarks(cm: &CheckMarks) -> u32 {
    cm.flags().iter().filter(|f| **f).count() as u32
}

/// Cyclomatic complexity grade, A (simplest) to F.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CcGrade {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl CcGrade {
    pub const ALL: [CcGrade; 6] = [CcGrade::A, CcGrade::B, CcGrade::C, CcGrade::D, CcGrade::E, CcGrade::F];

    pub fn from_letter(letter: char) -> Result<Self, EvalError> {
        match letter.to_ascii_uppercase() {
            'A' => Ok(CcGrade::A),
            'B' => Ok(CcGrade::B),
            'C' => Ok(CcGrade::C),
            'D' => Ok(CcGrade::D),
            'E' => Ok(CcGrade::E),
            'F' => Ok(CcGrade::F),
            _ => Err(EvalError::InvalidCcLetter(letter.to_string())),
        }
    }

    /// 1 for A up to 6 for F.
    pub fn rank(self) -> u32 {
        self as u32 + 1
    }

    pub fn letter(self) -> char {
        (b'A' + self as u8) as char
    }
}

impl fmt::Display for CcGrade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for CcGrade {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => CcGrade::from_letter(c),
            _ => Err(EvalError::InvalidCcLetter(s.to_string())),
        }
    }
}

/// Estimated update difficulty of one file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyScore {
    pub loc_points: u32,
    pub cc_points: u32,
    pub task_points: u32,
}

/// Totals allowed when selecting files for validation.
pub const SELECTION_RANGE: RangeInclusive<u32> = 3..=10;

impl DifficultyScore {
    pub fn total(&self) -> u32 {
        self.loc_points + self.cc_points + self.task_points
    }

    pub fn within_selection_range(&self) -> bool {
        SELECTION_RANGE.contains(&self.total())
    }
}

/// One point per started hundred lines (LOC/100 rounded half up, at least 1),
/// the CC grade rank, and one point per task.
pub fn score_difficulty(loc: usize, cc: CcGrade, task_count: u32) -> Result<DifficultyScore, EvalError> {
    if loc == 0 {
        return Err(EvalError::ZeroLoc);
    }
    if task_count == 0 {
        return Err(EvalError::ZeroTasks);
    }
    let hundreds = u32::try_from(loc.saturating_add(50) / 100).unwrap_or(u32::MAX);
    Ok(DifficultyScore {
        loc_points: hundreds.max(1),
        cc_points: cc.rank(),
        task_points: task_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loc_counts_non_blank_lines() {
        assert_eq!(count_loc("a\n\nb"), 2);
        assert_eq!(count_loc(""), 0);
        assert_eq!(count_loc("// comment\n  \t\ncode();\n"), 2);
        // Ten lines, three of them blank.
        let ten = "l1\n\nl3\nl4\n   \nl6\nl7\nl8\n\t\nl10";
        assert_eq!(ten.lines().count(), 10);
        assert_eq!(count_loc(ten), 7);
    }

    #[test]
    fn requirement_sums() {
        let r = |v| RequirementResult::new("r", v).unwrap();
        assert_eq!(score_requirements(&[r(1), r(0), r(1)]).unwrap(), 2);
        assert_eq!(score_requirements(&[r(0), r(0), r(0)]).unwrap(), 0);
        assert_eq!(score_requirements(&[]), Err(EvalError::EmptyInput));
        assert_eq!(RequirementResult::new("r", 2), Err(EvalError::NonBinaryRequirement(2)));
    }

    #[test]
    fn checkmark_counts() {
        assert_eq!(score_checkmarks(&CheckMarks::new(true, true, false)), 2);
        assert_eq!(score_checkmarks(&CheckMarks::new(false, false, false)), 0);
        assert_eq!(score_checkmarks(&CheckMarks::new(false, false, true)), 1);
    }

    #[test]
    fn difficulty_examples() {
        let d = score_difficulty(100, CcGrade::A, 1).unwrap();
        assert_eq!((d.loc_points, d.cc_points, d.task_points, d.total()), (1, 1, 1, 3));
        assert!(d.within_selection_range());
        assert_eq!(score_difficulty(250, CcGrade::C, 2).unwrap().total(), 8);
        let d = score_difficulty(49, CcGrade::A, 1).unwrap();
        assert_eq!(d.loc_points, 1);
        assert_eq!(d.total(), 3);
        assert_eq!(score_difficulty(149, CcGrade::A, 1).unwrap().loc_points, 1);
        assert_eq!(score_difficulty(150, CcGrade::A, 1).unwrap().loc_points, 2);
        assert!(!score_difficulty(900, CcGrade::F, 1).unwrap().within_selection_range());
        assert_eq!(score_difficulty(0, CcGrade::A, 1), Err(EvalError::ZeroLoc));
        assert_eq!(score_difficulty(10, CcGrade::A, 0), Err(EvalError::ZeroTasks));
    }

    #[test]
    fn cc_letters() {
        assert_eq!(CcGrade::from_letter('c').unwrap().rank(), 3);
        assert_eq!("F".parse::<CcGrade>().unwrap().rank(), 6);
        assert!(CcGrade::from_letter('G').is_err());
        assert!("AB".parse::<CcGrade>().is_err());
        for g in CcGrade::ALL {
            assert_eq!(CcGrade::from_letter(g.letter()).unwrap(), g);
        }
    }

    proptest! {
        #[test]
        fn requirement_score_bounds_and_monotonicity(values in proptest::collection::vec(0u8..=1, 1..30), flip in any::<prop::sample::Index>()) {
            let results: Vec<_> = values.iter().map(|v| RequirementResult::new("r", *v).unwrap()).collect();
            let score = score_requirements(&results).unwrap();
            prop_assert!(score as usize <= results.len());
            let i = flip.index(values.len());
            let mut flipped = results.clone();
            flipped[i] = RequirementResult::passed("r", true);
            prop_assert!(score_requirements(&flipped).unwrap() >= score);
        }
    }
}
