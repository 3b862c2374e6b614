//! Shipped generator configurations: the default desk-scale corpus used
//! by the end-to-end suites, plus university- and engineering-shaped
//! presets matching the published dataset statistics.

use super::{DepartmentShare, SynthConfig};

/// The five engineering department codes used for test subsets.
pub const COE_DEPARTMENTS: [&str; 5] = ["CEE", "CHE", "CSC", "ECE", "MCE"];

fn coe_share(code: &str, weight: f64) -> DepartmentShare {
    DepartmentShare {
        code: code.into(),
        college: "COE".into(),
        weight,
    }
}

fn coas_share(code: &str, weight: f64) -> DepartmentShare {
    DepartmentShare {
        code: code.into(),
        college: "COAS".into(),
        weight,
    }
}

/// Compact catalog for the default corpus: eight subjects so test-time
/// sequences revisit each subject often enough to reveal ability.
fn default_catalog() -> Vec<(String, u32)> {
    let mut pairs = Vec::new();
    for subject in ["BIOL", "CHEM", "CIVE", "ELEG", "ENGL", "KINE", "MATH", "PHYS"] {
        for level in [1000u32, 2000, 3000, 4000, 5000, 6000] {
            pairs.push((subject.to_string(), level));
        }
    }
    pairs.push(("BIOL".to_string(), 0));
    pairs.push(("MATH".to_string(), 0));
    pairs.sort();
    pairs
}

/// Default synthetic corpus: 2,000 students, 50 skills, four academic
/// years, pass rate 0.8. Seed 42.
pub fn default_corpus_config() -> SynthConfig {
    SynthConfig {
        n_students: 2000,
        n_skills: 50,
        records_per_student: (20, 60),
        total_records: None,
        years: vec![2020, 2021, 2022, 2023],
        target_pass_rate: 0.8,
        difficulty_spread: 1.4,
        ability_spread: 1.0,
        learning_rate_gain: 0.08,
        department_mix: vec![
            coe_share("CEE", 0.08),
            coe_share("CHE", 0.08),
            coe_share("CSC", 0.12),
            coe_share("ECE", 0.12),
            coe_share("MCE", 0.12),
            coas_share("BIOL", 0.24),
            coas_share("MATH", 0.24),
        ],
        clean_noise: 0.05,
        seed: 42,
        catalog: Some(default_catalog()),
        n_courses: Some(160),
        year_start_weights: Some(vec![0.5, 0.25, 0.15, 0.1]),
        duration_weights: None,
        skill_skew: 0.3,
        records_scale_with_duration: false,
        skills_introduced_final_year: 0,
    }
}

/// Catalog of 233 (subject, level) pairs whose sorted order reproduces
/// the published skill-id anchors: (ACCT,2000) first, (SPMT,1000) last,
/// with SPED 4000/5000 at ids 231/232.
pub fn univ_catalog() -> Vec<(String, u32)> {
    let mut pairs: Vec<(String, u32)> = vec![
        ("ACCT".into(), 2000),
        ("ACCT".into(), 3000),
        ("ACCT".into(), 4000),
        ("ACCT".into(), 5000),
        ("ADMN".into(), 5000),
        ("AFAM".into(), 1000),
    ];
    // 222 filler pairs strictly between AFAM and SPED: 55 subjects with
    // four levels plus one with two
    for i in 0..56usize {
        let code = format!(
            "{}{}XX",
            (b'B' + (i / 26) as u8) as char,
            (b'A' + (i % 26) as u8) as char
        );
        let levels: &[u32] = if i == 55 { &[1000, 2000] } else { &[1000, 2000, 3000, 4000] };
        for &level in levels {
            pairs.push((code.clone(), level));
        }
    }
    for level in [2000, 3000, 4000, 5000] {
        pairs.push(("SPED".into(), level));
    }
    pairs.push(("SPMT".into(), 1000));
    pairs.sort();
    pairs
}

/// University-shaped corpus: exact record/student/course/KC totals of
/// the full four-year dataset (352,148 records; 326,269 after cleaning;
/// 17,181 students; 2,124 courses; 233 knowledge components).
pub fn univ_shape_config() -> SynthConfig {
    let catalog = univ_catalog();
    SynthConfig {
        n_students: 17_181,
        n_skills: catalog.len(),
        records_per_student: (5, 36),
        total_records: Some(352_148),
        years: vec![2020, 2021, 2022, 2023],
        target_pass_rate: 0.8,
        difficulty_spread: 1.0,
        ability_spread: 1.0,
        learning_rate_gain: 0.05,
        department_mix: vec![
            coe_share("CEE", 0.015),
            coe_share("CHE", 0.017),
            coe_share("CSC", 0.031),
            coe_share("ECE", 0.027),
            coe_share("MCE", 0.043),
            coas_share("BIOL", 0.30),
            coas_share("CHEM", 0.17),
            coas_share("ENGL", 0.20),
            coas_share("MATH", 0.197),
        ],
        clean_noise: 25_879.0 / 352_148.0,
        seed: 42,
        catalog: Some(catalog),
        n_courses: Some(2_124),
        year_start_weights: Some(vec![0.40, 0.24, 0.20, 0.16]),
        duration_weights: Some(vec![0.19, 0.21, 0.25, 0.35]),
        skill_skew: 0.45,
        records_scale_with_duration: true,
        skills_introduced_final_year: 9,
    }
}

/// Engineering-shaped corpus approximating the College of Engineering
/// subset: 52,206 records (46,477 clean), 2,387 students, 1,027 courses,
/// 172 knowledge components, with roughly 36,000 interactions before the
/// final year.
pub fn coe_shape_config() -> SynthConfig {
    let catalog: Vec<(String, u32)> = {
        // 43 engineering-adjacent subjects x 4 levels = 172 pairs
        let mut pairs = Vec::new();
        for i in 0..43usize {
            let code = format!(
                "E{}{}G",
                (b'A' + (i / 26) as u8) as char,
                (b'A' + (i % 26) as u8) as char
            );
            for level in [1000u32, 2000, 3000, 4000] {
                pairs.push((code.clone(), level));
            }
        }
        pairs.sort();
        pairs
    };
    SynthConfig {
        n_students: 2_387,
        n_skills: catalog.len(),
        records_per_student: (8, 36),
        total_records: Some(52_206),
        years: vec![2020, 2021, 2022, 2023],
        target_pass_rate: 0.8,
        difficulty_spread: 1.0,
        ability_spread: 1.0,
        learning_rate_gain: 0.05,
        department_mix: vec![
            coe_share("CEE", 0.11),
            coe_share("CHE", 0.12),
            coe_share("CSC", 0.24),
            coe_share("ECE", 0.21),
            coe_share("MCE", 0.32),
        ],
        clean_noise: (52_206.0 - 46_477.0) / 52_206.0,
        seed: 42,
        catalog: Some(catalog),
        n_courses: Some(1_027),
        year_start_weights: Some(vec![0.40, 0.26, 0.19, 0.15]),
        duration_weights: Some(vec![0.19, 0.21, 0.25, 0.35]),
        skill_skew: 0.6,
        records_scale_with_duration: true,
        skills_introduced_final_year: 7,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univ_catalog_reproduces_published_anchors() {
        let pairs = univ_catalog();
        assert_eq!(pairs.len(), 233);
        assert_eq!(pairs[0], ("ACCT".to_string(), 2000));
        assert_eq!(pairs[1], ("ACCT".to_string(), 3000));
        assert_eq!(pairs[4], ("ADMN".to_string(), 5000));
        assert_eq!(pairs[5], ("AFAM".to_string(), 1000));
        assert_eq!(pairs[230], ("SPED".to_string(), 4000));
        assert_eq!(pairs[231], ("SPED".to_string(), 5000));
        assert_eq!(pairs[232], ("SPMT".to_string(), 1000));
        // strictly ascending, hence a valid vocabulary order
        for w in pairs.windows(2) {
            assert!(w[0] < w[1]);
        }
    }
}
