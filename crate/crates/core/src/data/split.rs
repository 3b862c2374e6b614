use std::collections::BTreeSet;

use super::{DataError, DatasetSplit, SkillVocabulary, StudentMetadata, StudentSequence};

/// Splits encoded sequences at `boundary_year`: interactions strictly
/// before the boundary train, the rest test. A student active on both
/// sides contributes two independent sequences; test sequences do not
/// carry the student's training history.
pub fn split_by_year(
    sequences: Vec<StudentSequence>,
    boundary_year: i32,
    vocabulary: SkillVocabulary,
) -> Result<DatasetSplit, DataError> {
    let mut min = i32::MAX;
    let mut max = i32::MIN;
    for s in &sequences {
        for i in &s.interactions {
            min = min.min(i.academic_year);
            max = max.max(i.academic_year);
        }
    }
    if min > max {
        return Err(DataError::EmptyInput);
    }
    if boundary_year < min || boundary_year > max + 1 {
        return Err(DataError::BoundaryOutsideRange {
            boundary: boundary_year,
            min,
            max,
        });
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for seq in sequences {
        let (before, after): (Vec<_>, Vec<_>) = seq
            .interactions
            .into_iter()
            .partition(|i| i.academic_year < boundary_year);
        if !before.is_empty() {
            train.push(StudentSequence {
                universal_id: seq.universal_id.clone(),
                interactions: before,
            });
        }
        if !after.is_empty() {
            test.push(StudentSequence {
                universal_id: seq.universal_id,
                interactions: after,
            });
        }
    }

    let mut warnings = Vec::new();
    if train.is_empty() {
        warnings.push(format!("train side empty at boundary {boundary_year}"));
    }
    if test.is_empty() {
        warnings.push(format!("test side empty at boundary {boundary_year}"));
    }
    let provenance = format!(
        "boundary_year={boundary_year}\nyear_range={min}..{max}\n\
         train_students={}\ntest_students={}\nvocabulary_size={}\n\
         test_warmup=none (test sequences do not see training history)\n",
        train.len(),
        test.len(),
        vocabulary.len()
    );
    Ok(DatasetSplit {
        train,
        test,
        vocabulary,
        provenance,
        warnings,
    })
}

/// Chops one sequence into consecutive non-overlapping windows of at
/// most `max_len` interactions; the final short window is kept.
pub fn window(sequence: &StudentSequence, max_len: usize) -> Result<Vec<StudentSequence>, DataError> {
    if max_len < 2 {
        return Err(DataError::WindowTooShort(max_len));
    }
    Ok(sequence
        .interactions
        .chunks(max_len)
        .map(|chunk| StudentSequence {
            universal_id: sequence.universal_id.clone(),
            interactions: chunk.to_vec(),
        })
        .collect())
}

/// What to do with students absent from the metadata file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingMetadataPolicy {
    #[default]
    Exclude,
    Keep,
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub split: DatasetSplit,
    /// Students dropped because they had no metadata entry.
    pub missing_excluded: usize,
}

/// Student-level department filter: keeps only students whose department
/// code is in `codes`. The vocabulary is untouched so skill ids stay
/// stable across subsets.
pub fn filter_by_department(
    split: &DatasetSplit,
    metadata: &StudentMetadata,
    codes: &BTreeSet<String>,
    policy: MissingMetadataPolicy,
) -> FilterOutcome {
    let mut missing = 0usize;
    let mut keep = |seqs: &[StudentSequence]| -> Vec<StudentSequence> {
        seqs.iter()
            .filter(|s| match metadata.department(&s.universal_id) {
                Some(dept) => codes.contains(dept),
                None => {
                    missing += 1;
                    policy == MissingMetadataPolicy::Keep
                }
            })
            .cloned()
            .collect()
    };
    let train = keep(&split.train);
    let test = keep(&split.test);
    FilterOutcome {
        split: DatasetSplit {
            train,
            test,
            vocabulary: split.vocabulary.clone(),
            provenance: format!("{}department_filter={codes:?}\n", split.provenance),
            warnings: split.warnings.clone(),
        },
        missing_excluded: missing,
    }
}
