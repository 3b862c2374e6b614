//! Ingestion and preparation of institutional course records: parsing,
//! cleaning, grade binarization, skill vocabulary construction, encoding
//! into per-student interaction sequences, chronological splitting and
//! windowing.

mod parse;
mod split;

pub use parse::{parse_metadata, parse_records, ParseOutcome, RejectedRow};
pub use split::{filter_by_department, split_by_year, window, FilterOutcome, MissingMetadataPolicy};

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("input is missing required column '{0}'")]
    MissingColumn(String),
    #[error("grade '{0}' cannot be binarized (not a gradable outcome)")]
    NotBinarizable(Grade),
    #[error("unknown grade symbol '{0}'")]
    UnknownGrade(String),
    #[error("pair ({subject}, {level}) is not in the skill vocabulary")]
    MissingPair { subject: String, level: u32 },
    #[error("split boundary {boundary} outside data year range [{min}, {max}]")]
    BoundaryOutsideRange { boundary: i32, min: i32, max: i32 },
    #[error("duplicate metadata entry for student '{0}'")]
    DuplicateMetadata(String),
    #[error("window length must be at least 2, got {0}")]
    WindowTooShort(usize),
    #[error("no records to split")]
    EmptyInput,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Letter grade as recorded by the student information system.
/// `I` (incomplete) and `Ng` (non-gradable / no grade) are removed by
/// cleaning; the rest binarize to pass or fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grade {
    A,
    B,
    C,
    D,
    F,
    W,
    Cr,
    Nc,
    I,
    Ng,
}

impl Grade {
    pub fn parse(s: &str) -> Result<Grade, DataError> {
        Ok(match s {
            "A" => Grade::A,
            "B" => Grade::B,
            "C" => Grade::C,
            "D" => Grade::D,
            "F" => Grade::F,
            "W" => Grade::W,
            "CR" => Grade::Cr,
            "NC" => Grade::Nc,
            "I" => Grade::I,
            "NG" => Grade::Ng,
            other => return Err(DataError::UnknownGrade(other.to_string())),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Grade::A => "A",
            Grade::B => "B",
            Grade::C => "C",
            Grade::D => "D",
            Grade::F => "F",
            Grade::W => "W",
            Grade::Cr => "CR",
            Grade::Nc => "NC",
            Grade::I => "I",
            Grade::Ng => "NG",
        }
    }

    /// True for incomplete / non-gradable records that cleaning removes.
    pub fn is_ungradable(self) -> bool {
        matches!(self, Grade::I | Grade::Ng)
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One (year, student, subject, level, grade) row of the input schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub academic_year: i32,
    pub universal_id: String,
    pub course_subject: String,
    pub course_level: u32,
    pub grade: Grade,
}

/// Pass/fail binarization: A, B, C and Credit count as passing; D, F,
/// withdraw and No-credit count as failing.
pub fn binarize_grade(grade: Grade) -> Result<u8, DataError> {
    match grade {
        Grade::A | Grade::B | Grade::C | Grade::Cr => Ok(1),
        Grade::D | Grade::F | Grade::W | Grade::Nc => Ok(0),
        Grade::I | Grade::Ng => Err(DataError::NotBinarizable(grade)),
    }
}

/// Result of removing ungradable records.
#[derive(Debug, Clone)]
pub struct CleanOutcome {
    pub records: Vec<RawRecord>,
    pub removed: usize,
}

/// Drops records whose grade is incomplete or non-gradable, reporting
/// how many were removed. Idempotent.
pub fn clean(records: Vec<RawRecord>) -> CleanOutcome {
    let before = records.len();
    let records: Vec<RawRecord> = records
        .into_iter()
        .filter(|r| !r.grade.is_ungradable())
        .collect();
    let removed = before - records.len();
    CleanOutcome { records, removed }
}

/// Bijection between (course subject, course level) pairs and 1-based
/// skill ids, assigned in ascending (subject, level) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillVocabulary {
    pairs: Vec<(String, u32)>,
    lookup: HashMap<(String, u32), u32>,
}

impl SkillVocabulary {
    pub fn from_pairs(mut pairs: Vec<(String, u32)>) -> SkillVocabulary {
        pairs.sort();
        pairs.dedup();
        let lookup = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), (i + 1) as u32))
            .collect();
        SkillVocabulary { pairs, lookup }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn skill_id(&self, subject: &str, level: u32) -> Option<u32> {
        self.lookup.get(&(subject.to_string(), level)).copied()
    }

    /// Inverse lookup; ids are 1-based.
    pub fn pair(&self, skill_id: u32) -> Option<(&str, u32)> {
        self.pairs
            .get((skill_id as usize).checked_sub(1)?)
            .map(|(s, l)| (s.as_str(), *l))
    }

    pub fn pairs(&self) -> &[(String, u32)] {
        &self.pairs
    }
}

/// Distinct (subject, level) pairs of `records`, sorted ascending and
/// numbered 1..K.
pub fn build_vocabulary(records: &[RawRecord]) -> SkillVocabulary {
    let set: std::collections::BTreeSet<(String, u32)> = records
        .iter()
        .map(|r| (r.course_subject.clone(), r.course_level))
        .collect();
    SkillVocabulary::from_pairs(set.into_iter().collect())
}

/// One encoded student-course outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interaction {
    pub skill_id: u32,
    pub correct: u8,
    pub academic_year: i32,
}

/// A student's chronologically ordered interactions; ties within a year
/// keep input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StudentSequence {
    pub universal_id: String,
    pub interactions: Vec<Interaction>,
}

impl StudentSequence {
    /// Next-step losses need at least two interactions.
    pub fn usable_for_next_step(&self) -> bool {
        self.interactions.len() >= 2
    }
}

/// Encodes cleaned records into per-student interaction sequences,
/// grouped by universal id in first-appearance order.
pub fn encode(
    records: &[RawRecord],
    vocab: &SkillVocabulary,
) -> Result<Vec<StudentSequence>, DataError> {
    let mut order: Vec<String> = Vec::new();
    let mut by_student: HashMap<String, Vec<Interaction>> = HashMap::new();
    for r in records {
        let skill_id =
            vocab
                .skill_id(&r.course_subject, r.course_level)
                .ok_or(DataError::MissingPair {
                    subject: r.course_subject.clone(),
                    level: r.course_level,
                })?;
        let correct = binarize_grade(r.grade)?;
        let entry = by_student.entry(r.universal_id.clone()).or_insert_with(|| {
            order.push(r.universal_id.clone());
            Vec::new()
        });
        entry.push(Interaction {
            skill_id,
            correct,
            academic_year: r.academic_year,
        });
    }
    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let mut interactions = by_student.remove(&id).unwrap();
        interactions.sort_by_key(|i| i.academic_year); // stable: ties keep input order
        out.push(StudentSequence {
            universal_id: id,
            interactions,
        });
    }
    Ok(out)
}

/// Per-student (college, department) codes from the metadata file.
#[derive(Debug, Clone, Default)]
pub struct StudentMetadata {
    map: HashMap<String, (String, String)>,
}

impl StudentMetadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: String, college: String, department: String) -> Result<(), DataError> {
        if self.map.contains_key(&id) {
            return Err(DataError::DuplicateMetadata(id));
        }
        self.map.insert(id, (college, department));
        Ok(())
    }

    pub fn department(&self, id: &str) -> Option<&str> {
        self.map.get(id).map(|(_, d)| d.as_str())
    }

    pub fn college(&self, id: &str) -> Option<&str> {
        self.map.get(id).map(|(c, _)| c.as_str())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Chronologically split encoded sequences with the shared vocabulary
/// and a provenance snapshot of how the split was produced.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<StudentSequence>,
    pub test: Vec<StudentSequence>,
    pub vocabulary: SkillVocabulary,
    pub provenance: String,
    pub warnings: Vec<String>,
}

impl DatasetSplit {
    pub fn train_interactions(&self) -> usize {
        self.train.iter().map(|s| s.interactions.len()).sum()
    }

    pub fn test_interactions(&self) -> usize {
        self.test.iter().map(|s| s.interactions.len()).sum()
    }
}

/// Five-row corpus summary: totals before/after cleaning, student count,
/// distinct courses (when known) and distinct knowledge components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetStatistics {
    pub total_records: usize,
    pub records_after_cleaning: usize,
    pub students: usize,
    pub course_types: Option<usize>,
    pub kc_types: usize,
}

/// Computes corpus statistics from records alone. The schema carries no
/// course numbers, so `course_types` is left unset here; the synthetic
/// generator fills it from its own bookkeeping.
pub fn summarize(records: &[RawRecord]) -> DatasetStatistics {
    let clean_count = records.iter().filter(|r| !r.grade.is_ungradable()).count();
    let students: std::collections::HashSet<&str> =
        records.iter().map(|r| r.universal_id.as_str()).collect();
    let kcs: std::collections::HashSet<(&str, u32)> = records
        .iter()
        .filter(|r| !r.grade.is_ungradable())
        .map(|r| (r.course_subject.as_str(), r.course_level))
        .collect();
    DatasetStatistics {
        total_records: records.len(),
        records_after_cleaning: clean_count,
        students: students.len(),
        course_types: None,
        kc_types: kcs.len(),
    }
}

impl DatasetStatistics {
    /// Renders the summary in the five-row statistics-table layout.
    pub fn render(&self, label: &str) -> String {
        let courses = match self.course_types {
            Some(n) => n.to_string(),
            None => "n/a".to_string(),
        };
        let mut s = String::new();
        s.push_str(&format!("{:<31}{}\n", "Items", label));
        s.push_str(&format!("{:<31}{}\n", "Total Records", self.total_records));
        s.push_str(&format!(
            "{:<31}{}\n",
            "Records after data cleaning", self.records_after_cleaning
        ));
        s.push_str(&format!("{:<31}{}\n", "Students", self.students));
        s.push_str(&format!("{:<31}{}\n", "Types of Courses", courses));
        s.push_str(&format!(
            "{:<31}{}\n",
            "Types of Knowledge Components", self.kc_types
        ));
        s
    }
}

/// Cleaned, encoded and chronologically split data plus the cleaning
/// removal count.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub split: DatasetSplit,
    pub removed: usize,
}

/// The full preparation chain: clean, build the vocabulary over every
/// clean record (train and test share ids), encode per student, split at
/// the boundary year.
pub fn prepare_split(records: Vec<RawRecord>, boundary_year: i32) -> Result<PreparedData, DataError> {
    let cleaned = clean(records);
    let vocabulary = build_vocabulary(&cleaned.records);
    let sequences = encode(&cleaned.records, &vocabulary)?;
    let split = split::split_by_year(sequences, boundary_year, vocabulary)?;
    Ok(PreparedData {
        split,
        removed: cleaned.removed,
    })
}

/// Stable map used when rendering vocabulary files: id -> pair.
pub fn vocabulary_rows(vocab: &SkillVocabulary) -> BTreeMap<u32, (String, u32)> {
    vocab
        .pairs()
        .iter()
        .enumerate()
        .map(|(i, (s, l))| ((i + 1) as u32, (s.clone(), *l)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(year: i32, id: &str, subject: &str, level: u32, grade: Grade) -> RawRecord {
        RawRecord {
            academic_year: year,
            universal_id: id.to_string(),
            course_subject: subject.to_string(),
            course_level: level,
            grade,
        }
    }

    #[test]
    fn binarize_follows_pass_fail_rule() {
        assert_eq!(binarize_grade(Grade::B).unwrap(), 1);
        assert_eq!(binarize_grade(Grade::Cr).unwrap(), 1);
        assert_eq!(binarize_grade(Grade::W).unwrap(), 0);
        assert_eq!(binarize_grade(Grade::Nc).unwrap(), 0);
        assert!(matches!(
            binarize_grade(Grade::I),
            Err(DataError::NotBinarizable(Grade::I))
        ));
    }

    #[test]
    fn clean_removes_only_ungradable_and_is_idempotent() {
        let records = vec![
            rec(2020, "1", "MATH", 1000, Grade::A),
            rec(2020, "1", "MATH", 2000, Grade::I),
            rec(2021, "2", "ENGL", 1000, Grade::Ng),
            rec(2021, "2", "ENGL", 2000, Grade::F),
        ];
        let out = clean(records);
        assert_eq!(out.removed, 2);
        assert_eq!(out.records.len(), 2);
        let again = clean(out.records.clone());
        assert_eq!(again.removed, 0);
        assert_eq!(again.records, out.records);
    }

    #[test]
    fn clean_all_incomplete_input_empties() {
        let records = vec![
            rec(2020, "1", "MATH", 1000, Grade::I),
            rec(2020, "2", "CHEM", 1000, Grade::Ng),
        ];
        let out = clean(records);
        assert!(out.records.is_empty());
        assert_eq!(out.removed, 2);
    }

    #[test]
    fn vocabulary_sorted_ascending_one_based() {
        let records = vec![
            rec(2020, "1", "ACCT", 3000, Grade::A),
            rec(2020, "1", "ACCT", 2000, Grade::B),
            rec(2020, "2", "ZOOL", 1000, Grade::C),
        ];
        let v = build_vocabulary(&records);
        assert_eq!(v.skill_id("ACCT", 2000), Some(1));
        assert_eq!(v.skill_id("ACCT", 3000), Some(2));
        assert_eq!(v.skill_id("ZOOL", 1000), Some(3));
        assert_eq!(v.pair(1), Some(("ACCT", 2000)));
        assert_eq!(v.skill_id("MATH", 1000), None);
    }

    #[test]
    fn vocabulary_single_record() {
        let v = build_vocabulary(&[rec(2020, "1", "MATH", 1000, Grade::A)]);
        assert_eq!(v.len(), 1);
        assert_eq!(v.skill_id("MATH", 1000), Some(1));
    }

    #[test]
    fn vocabulary_rebuild_is_stable() {
        let records = vec![
            rec(2021, "3", "PHYS", 2000, Grade::C),
            rec(2020, "1", "MATH", 1000, Grade::A),
            rec(2022, "2", "CHEM", 3000, Grade::F),
        ];
        let a = build_vocabulary(&records);
        let mut shuffled = records.clone();
        shuffled.reverse();
        let b = build_vocabulary(&shuffled);
        assert_eq!(a, b);
    }

    #[test]
    fn encode_groups_by_student_and_same_pair_shares_skill() {
        // MATH 3201 and MATH 3800 both arrive as (MATH, 3000)
        let records = vec![
            rec(2020, "s1", "MATH", 3000, Grade::A),
            rec(2020, "s2", "ENGL", 1000, Grade::F),
            rec(2021, "s1", "MATH", 3000, Grade::B),
        ];
        let v = build_vocabulary(&records);
        let seqs = encode(&records, &v).unwrap();
        assert_eq!(seqs.len(), 2);
        assert_eq!(seqs[0].universal_id, "s1");
        assert_eq!(seqs[0].interactions.len(), 2);
        assert_eq!(
            seqs[0].interactions[0].skill_id,
            seqs[0].interactions[1].skill_id
        );
    }

    #[test]
    fn encode_empty_is_empty() {
        let v = build_vocabulary(&[]);
        assert!(encode(&[], &v).unwrap().is_empty());
    }

    #[test]
    fn encode_missing_pair_names_it() {
        let records = vec![rec(2020, "s1", "MATH", 3000, Grade::A)];
        let v = build_vocabulary(&[]);
        let err = encode(&records, &v).unwrap_err();
        assert!(err.to_string().contains("MATH") && err.to_string().contains("3000"));
    }

    #[test]
    fn encode_sorts_by_year_with_stable_ties() {
        let records = vec![
            rec(2021, "s1", "BBBB", 1000, Grade::A),
            rec(2020, "s1", "AAAA", 1000, Grade::A),
            rec(2021, "s1", "CCCC", 1000, Grade::A),
        ];
        let v = build_vocabulary(&records);
        let seqs = encode(&records, &v).unwrap();
        let years: Vec<i32> = seqs[0].interactions.iter().map(|i| i.academic_year).collect();
        assert_eq!(years, vec![2020, 2021, 2021]);
        // ties keep input order: BBBB (id 2) before CCCC (id 3)
        assert_eq!(seqs[0].interactions[1].skill_id, 2);
        assert_eq!(seqs[0].interactions[2].skill_id, 3);
    }

    #[test]
    fn vocabulary_roundtrip_bijection() {
        let records = vec![
            rec(2020, "1", "MATH", 1000, Grade::A),
            rec(2020, "1", "CHEM", 2000, Grade::B),
            rec(2020, "1", "PHYS", 4000, Grade::C),
        ];
        let v = build_vocabulary(&records);
        let seqs = encode(&records, &v).unwrap();
        for s in &seqs {
            for i in &s.interactions {
                let (subj, level) = v.pair(i.skill_id).unwrap();
                assert_eq!(v.skill_id(subj, level), Some(i.skill_id));
            }
        }
    }

    #[test]
    fn summarize_empty_is_zero() {
        let s = summarize(&[]);
        assert_eq!(s.total_records, 0);
        assert_eq!(s.records_after_cleaning, 0);
        assert_eq!(s.students, 0);
        assert_eq!(s.kc_types, 0);
    }
}
