//! On-disk formats for prepared datasets: encoded sequence files, the
//! vocabulary file, and loaders that rebuild a `DatasetSplit`.

use std::collections::HashMap;
use std::path::Path;

use kt_core::data::{
    DatasetSplit, Interaction, SkillVocabulary, StudentMetadata, StudentSequence,
};

use crate::CliError;

pub fn sequences_to_csv(sequences: &[StudentSequence]) -> String {
    let mut out = String::from("universal_id,skill_id,correct,academic_year\n");
    for seq in sequences {
        for i in &seq.interactions {
            out.push_str(&format!(
                "{},{},{},{}\n",
                seq.universal_id, i.skill_id, i.correct, i.academic_year
            ));
        }
    }
    out
}

pub fn vocabulary_to_csv(vocab: &SkillVocabulary) -> String {
    let mut out = String::from("skill_id,course_subject,course_level\n");
    for (i, (subject, level)) in vocab.pairs().iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, subject, level));
    }
    out
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))
}

pub fn sequences_from_csv(text: &str, origin: &str) -> Result<Vec<StudentSequence>, CliError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "universal_id,skill_id,correct,academic_year" {
        return Err(CliError::Data(format!(
            "{origin}: unexpected sequence file header '{header}'"
        )));
    }
    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, Vec<Interaction>> = HashMap::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CliError::Data(format!(
                "{origin}: line {}: expected 4 fields",
                lineno + 2
            )));
        }
        let parse_err =
            |what: &str| CliError::Data(format!("{origin}: line {}: bad {what}", lineno + 2));
        let id = fields[0].to_string();
        let skill_id: u32 = fields[1].parse().map_err(|_| parse_err("skill_id"))?;
        let correct: u8 = fields[2].parse().map_err(|_| parse_err("correct"))?;
        let academic_year: i32 = fields[3].parse().map_err(|_| parse_err("academic_year"))?;
        let entry = grouped.entry(id.clone()).or_insert_with(|| {
            order.push(id);
            Vec::new()
        });
        entry.push(Interaction {
            skill_id,
            correct,
            academic_year,
        });
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let interactions = grouped.remove(&id).unwrap();
            StudentSequence {
                universal_id: id,
                interactions,
            }
        })
        .collect())
}

pub fn vocabulary_from_csv(text: &str, origin: &str) -> Result<SkillVocabulary, CliError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "skill_id,course_subject,course_level" {
        return Err(CliError::Data(format!(
            "{origin}: unexpected vocabulary header '{header}'"
        )));
    }
    let mut pairs: Vec<(u32, String, u32)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CliError::Data(format!(
                "{origin}: line {}: expected 3 fields",
                lineno + 2
            )));
        }
        let id: u32 = fields[0]
            .parse()
            .map_err(|_| CliError::Data(format!("{origin}: line {}: bad skill_id", lineno + 2)))?;
        let level: u32 = fields[2]
            .parse()
            .map_err(|_| CliError::Data(format!("{origin}: line {}: bad level", lineno + 2)))?;
        pairs.push((id, fields[1].to_string(), level));
    }
    pairs.sort();
    for (expected, (id, _, _)) in pairs.iter().enumerate() {
        if *id as usize != expected + 1 {
            return Err(CliError::Data(format!(
                "{origin}: skill ids are not contiguous from 1 (saw {id} at position {})",
                expected + 1
            )));
        }
    }
    let vocab = SkillVocabulary::from_pairs(pairs.iter().map(|(_, s, l)| (s.clone(), *l)).collect());
    // the sorted pair order must agree with the stored ids
    for (id, subject, level) in &pairs {
        if vocab.skill_id(subject, *level) != Some(*id) {
            return Err(CliError::Data(format!(
                "{origin}: pair ({subject}, {level}) stored under id {id} but sorts elsewhere"
            )));
        }
    }
    Ok(vocab)
}

/// Reads a prepared data directory (train/test sequences + vocabulary,
/// plus metadata when present).
pub fn load_prepared(dir: &Path) -> Result<(DatasetSplit, Option<StudentMetadata>), CliError> {
    let train = sequences_from_csv(&read_file(&dir.join("train_sequences.csv"))?, "train_sequences.csv")?;
    let test = sequences_from_csv(&read_file(&dir.join("test_sequences.csv"))?, "test_sequences.csv")?;
    let vocabulary = vocabulary_from_csv(&read_file(&dir.join("vocabulary.csv"))?, "vocabulary.csv")?;
    let provenance = std::fs::read_to_string(dir.join("provenance.txt")).unwrap_or_default();
    let metadata_path = dir.join("metadata.csv");
    let metadata = if metadata_path.exists() {
        let file = std::fs::File::open(&metadata_path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", metadata_path.display())))?;
        Some(kt_core::data::parse_metadata(file).map_err(|e| CliError::Data(e.to_string()))?)
    } else {
        None
    };
    Ok((
        DatasetSplit {
            train,
            test,
            vocabulary,
            provenance,
            warnings: Vec::new(),
        },
        metadata,
    ))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_csv_roundtrip() {
        let seqs = vec![
            StudentSequence {
                universal_id: "a".into(),
                interactions: vec![
                    Interaction { skill_id: 2, correct: 1, academic_year: 2020 },
                    Interaction { skill_id: 1, correct: 0, academic_year: 2021 },
                ],
            },
            StudentSequence {
                universal_id: "b".into(),
                interactions: vec![Interaction { skill_id: 3, correct: 1, academic_year: 2023 }],
            },
        ];
        let csv = sequences_to_csv(&seqs);
        let back = sequences_from_csv(&csv, "test").unwrap();
        assert_eq!(back, seqs);
    }

    #[test]
    fn vocabulary_csv_roundtrip_and_contiguity_check() {
        let vocab = SkillVocabulary::from_pairs(vec![
            ("MATH".into(), 1000),
            ("CHEM".into(), 2000),
            ("MATH".into(), 3000),
        ]);
        let csv = vocabulary_to_csv(&vocab);
        let back = vocabulary_from_csv(&csv, "test").unwrap();
        assert_eq!(back, vocab);

        let broken = "skill_id,course_subject,course_level\n1,MATH,1000\n3,CHEM,2000\n";
        assert!(vocabulary_from_csv(broken, "test").is_err());
    }
}
