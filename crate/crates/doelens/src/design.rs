//! Full and fractional factorial probe designs.
//!
//! Runs are rows of a ±1 matrix, one column per factor. A fractional
//! design is built from a full factorial over the base factors plus
//! generated columns defined as products of base columns (e.g. `D=AB`).
//! The alias structure groups effects whose contrast columns coincide in
//! the run matrix, and the resolution is the length of the shortest word
//! in the defining relation.

use rand::prelude::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DoeError, Result};
use crate::factor_space::{two_level_projection, FactorSetting, FactorSpace};

/// Guard against accidental 2^k blowup.
pub const MAX_FACTORS: usize = 20;

/// A generated column: `target = product of product_of`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorWord {
    pub target: usize,
    pub product_of: Vec<usize>,
}

impl GeneratorWord {
    pub fn new(target: usize, mut product_of: Vec<usize>) -> Result<Self> {
        product_of.sort_unstable();
        product_of.dedup();
        if product_of.is_empty() {
            return Err(DoeError::InvalidGenerator(
                "generator product must be nonempty".into(),
            ));
        }
        if product_of.contains(&target) {
            return Err(DoeError::InvalidGenerator(format!(
                "generator target {} appears in its own product",
                factor_letter(target)
            )));
        }
        Ok(Self { target, product_of })
    }

    /// Parses `"D=AB"` style notation (letters A.. index base factors).
    pub fn parse(text: &str) -> Result<Self> {
        let (lhs, rhs) = text
            .split_once('=')
            .ok_or_else(|| DoeError::InvalidGenerator(format!("missing '=' in '{text}'")))?;
        let target = letter_index(lhs.trim())?;
        let product = rhs
            .trim()
            .chars()
            .map(|c| letter_index(&c.to_string()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(target, product)
    }

    /// The defining word of this generator, e.g. `D=AB` gives `ABD`.
    fn defining_word(&self) -> Vec<usize> {
        let mut word = self.product_of.clone();
        word.push(self.target);
        word.sort_unstable();
        word
    }
}

impl std::fmt::Display for GeneratorWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}=", factor_letter(self.target))?;
        for &i in &self.product_of {
            write!(f, "{}", factor_letter(i))?;
        }
        Ok(())
    }
}

fn letter_index(s: &str) -> Result<usize> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_uppercase() => Ok(c as usize - 'A' as usize),
        _ => Err(DoeError::InvalidGenerator(format!(
            "expected a single factor letter, got '{s}'"
        ))),
    }
}

/// Letter name for a factor column (A, B, C, ...).
pub fn factor_letter(index: usize) -> char {
    (b'A' + index as u8) as char
}

/// Renders an effect word such as `{0,3}` as `"AD"`.
pub fn word_name(word: &[usize]) -> String {
    word.iter().map(|&i| factor_letter(i)).collect()
}

/// A ±1 run matrix plus the generators that built it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignPlan {
    pub k: usize,
    pub p: usize,
    /// M×k matrix over {-1, +1}, M = 2^(k-p).
    pub runs: Vec<Vec<i8>>,
    pub generators: Vec<GeneratorWord>,
    /// Length of the shortest defining word; `None` for a full factorial.
    pub resolution: Option<usize>,
}

impl DesignPlan {
    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    /// Sign column of a single factor.
    pub fn column(&self, factor: usize) -> Vec<i8> {
        self.runs.iter().map(|row| row[factor]).collect()
    }

    /// Sign column of an effect word (elementwise product of its factors).
    pub fn effect_column(&self, word: &[usize]) -> Vec<i8> {
        self.runs
            .iter()
            .map(|row| word.iter().map(|&f| row[f]).product())
            .collect()
    }
}

/// All 2^k sign combinations; column 0 alternates fastest.
pub fn full_factorial(k: usize) -> Result<DesignPlan> {
    if k == 0 || k > MAX_FACTORS {
        return Err(DoeError::InvalidConfig(format!(
            "factor count must be in 1..={MAX_FACTORS}, got {k}"
        )));
    }
    let m = 1usize << k;
    let runs = (0..m)
        .map(|i| {
            (0..k)
                .map(|j| if (i >> j) & 1 == 1 { 1 } else { -1 })
                .collect()
        })
        .collect();
    Ok(DesignPlan {
        k,
        p: 0,
        runs,
        generators: Vec::new(),
        resolution: None,
    })
}

/// 2^(k-p) design: a full factorial over the first k-p factors with the
/// last p columns generated as products of base columns.
pub fn fractional_factorial(k: usize, generators: &[GeneratorWord]) -> Result<DesignPlan> {
    let p = generators.len();
    if p == 0 {
        return full_factorial(k);
    }
    if k == 0 || k > MAX_FACTORS || p >= k {
        return Err(DoeError::InvalidConfig(format!(
            "invalid design dimensions k={k}, p={p}"
        )));
    }
    let base = k - p;
    let mut targets: Vec<usize> = generators.iter().map(|g| g.target).collect();
    targets.sort_unstable();
    let expected: Vec<usize> = (base..k).collect();
    if targets != expected {
        return Err(DoeError::InvalidGenerator(format!(
            "generator targets must be exactly the last {p} factors ({})",
            expected.iter().map(|&i| factor_letter(i)).collect::<String>()
        )));
    }
    for g in generators {
        if g.product_of.iter().any(|&i| i >= base) {
            return Err(DoeError::InvalidGenerator(format!(
                "generator {g} references a non-base factor"
            )));
        }
    }

    let base_plan = full_factorial(base)?;
    let mut by_target = generators.to_vec();
    by_target.sort_by_key(|g| g.target);
    let runs = base_plan
        .runs
        .into_iter()
        .map(|mut row| {
            for g in &by_target {
                let sign: i8 = g.product_of.iter().map(|&i| row[i]).product();
                row.push(sign);
            }
            row
        })
        .collect();

    let resolution = defining_relation(generators)
        .iter()
        .map(|w| w.len())
        .min();
    Ok(DesignPlan {
        k,
        p,
        runs,
        generators: by_target,
        resolution,
    })
}

/// Nonempty words of the defining relation: the group generated by the
/// generator words under symmetric difference.
fn defining_relation(generators: &[GeneratorWord]) -> Vec<Vec<usize>> {
    let mut words: Vec<Vec<usize>> = vec![Vec::new()];
    for g in generators {
        let w = g.defining_word();
        let mut next = words.clone();
        for existing in &words {
            next.push(symmetric_difference(existing, &w));
        }
        next.sort();
        next.dedup();
        words = next;
    }
    words.retain(|w| !w.is_empty());
    words
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a
        .iter()
        .filter(|x| !b.contains(x))
        .chain(b.iter().filter(|x| !a.contains(x)))
        .copied()
        .collect();
    out.sort_unstable();
    out
}

/// Groups of effects (main effects and two-factor interactions) whose sign
/// columns are identical or negated in the run matrix. Unaliased effects
/// form singleton groups.
pub fn alias_structure(plan: &DesignPlan) -> Vec<Vec<Vec<usize>>> {
    let mut words: Vec<Vec<usize>> = (0..plan.k).map(|i| vec![i]).collect();
    for a in 0..plan.k {
        for b in a + 1..plan.k {
            words.push(vec![a, b]);
        }
    }
    let columns: Vec<Vec<i8>> = words.iter().map(|w| plan.effect_column(w)).collect();

    let mut groups: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut assigned = vec![false; words.len()];
    for i in 0..words.len() {
        if assigned[i] {
            continue;
        }
        let mut group = vec![words[i].clone()];
        assigned[i] = true;
        for j in i + 1..words.len() {
            if assigned[j] {
                continue;
            }
            let same = columns[i] == columns[j];
            let negated = columns[i]
                .iter()
                .zip(&columns[j])
                .all(|(x, y)| *x == -*y);
            if same || negated {
                group.push(words[j].clone());
                assigned[j] = true;
            }
        }
        groups.push(group);
    }
    groups
}

/// True when no main effect shares an alias group with another main effect.
pub fn mains_unaliased(groups: &[Vec<Vec<usize>>]) -> bool {
    groups
        .iter()
        .all(|g| g.iter().filter(|w| w.len() == 1).count() <= 1)
}

/// Maps each design row onto concrete factor settings: −1 draws a level
/// from the factor's low quartile set, +1 from the high quartile set.
/// Sampling within the quartile sets gives replicates within-group spread.
pub fn realize<R: Rng>(
    plan: &DesignPlan,
    space: &FactorSpace,
    replicates: usize,
    rng: &mut R,
) -> Result<Vec<FactorSetting>> {
    if plan.k != space.len() {
        return Err(DoeError::DimensionMismatch(format!(
            "plan has {} factors, space has {}",
            plan.k,
            space.len()
        )));
    }
    if replicates == 0 {
        return Err(DoeError::InvalidConfig("replicates must be >= 1".into()));
    }
    let projections: Vec<(Vec<usize>, Vec<usize>)> = (0..space.len())
        .map(|i| two_level_projection(space, i))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(plan.run_count() * replicates);
    for row in &plan.runs {
        for _ in 0..replicates {
            let values = row
                .iter()
                .zip(&projections)
                .map(|(&sign, (low, high))| {
                    let set = if sign < 0 { low } else { high };
                    *set.choose(rng).expect("projection sets are nonempty")
                })
                .collect();
            out.push(FactorSetting::new(values));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor_space::{FactorRole, FactorSpec};
    use crate::rng::stream;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn exp1_generators() -> Vec<GeneratorWord> {
        vec![
            GeneratorWord::parse("D=AB").unwrap(),
            GeneratorWord::parse("E=AC").unwrap(),
        ]
    }

    fn dsprites_like_space() -> FactorSpace {
        FactorSpace::new(vec![
            FactorSpec::new("shape", FactorRole::Semantic, 3),
            FactorSpec::new("scale", FactorRole::Nuisance, 6),
            FactorSpec::new("orientation", FactorRole::Nuisance, 40),
            FactorSpec::new("posX", FactorRole::Nuisance, 32),
            FactorSpec::new("posY", FactorRole::Nuisance, 32),
        ])
        .unwrap()
    }

    #[test]
    fn full_factorial_k1() {
        let plan = full_factorial(1).unwrap();
        assert_eq!(plan.runs, vec![vec![-1], vec![1]]);
    }

    #[test]
    fn full_factorial_k3_balanced() {
        let plan = full_factorial(3).unwrap();
        assert_eq!(plan.run_count(), 8);
        for j in 0..3 {
            let col = plan.column(j);
            assert_eq!(col.iter().filter(|&&s| s == -1).count(), 4);
            assert_eq!(col.iter().filter(|&&s| s == 1).count(), 4);
        }
    }

    #[test]
    fn full_factorial_k5_distinct_rows() {
        let plan = full_factorial(5).unwrap();
        let distinct: HashSet<_> = plan.runs.iter().collect();
        assert_eq!(distinct.len(), 32);
    }

    #[test]
    fn full_factorial_guards_range() {
        assert!(full_factorial(0).is_err());
        assert!(full_factorial(21).is_err());
    }

    #[test]
    fn fractional_2_5_2_has_8_runs_and_correct_products() {
        let plan = fractional_factorial(5, &exp1_generators()).unwrap();
        assert_eq!(plan.run_count(), 8);
        assert_eq!(plan.p, 2);
        for row in &plan.runs {
            assert_eq!(row[3], row[0] * row[1]);
            assert_eq!(row[4], row[0] * row[2]);
        }
        // The all-minus base row generates D=+, E=+.
        let first = &plan.runs[0];
        assert_eq!(&first[..3], &[-1, -1, -1]);
        assert_eq!(first[3], 1);
        assert_eq!(first[4], 1);
    }

    #[test]
    fn fractional_with_no_generators_is_full() {
        let plan = fractional_factorial(2, &[]).unwrap();
        assert_eq!(plan, full_factorial(2).unwrap());
    }

    #[test]
    fn fractional_rejects_malformed_generators() {
        // Self-reference.
        assert!(GeneratorWord::new(3, vec![3]).is_err());
        // Target not among the last p factors.
        let g = vec![GeneratorWord::parse("C=AB").unwrap()];
        assert!(fractional_factorial(5, &g).is_err());
        // Product referencing a generated factor.
        let g = vec![
            GeneratorWord::parse("D=AB").unwrap(),
            GeneratorWord::parse("E=AD").unwrap(),
        ];
        assert!(fractional_factorial(5, &g).is_err());
    }

    #[test]
    fn resolution_of_exp1_plan_is_three() {
        let plan = fractional_factorial(5, &exp1_generators()).unwrap();
        assert_eq!(plan.resolution, Some(3));
        let relation = defining_relation(&exp1_generators());
        let names: HashSet<String> = relation.iter().map(|w| word_name(w)).collect();
        let expected: HashSet<String> = ["ABD", "ACE", "BCDE"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(names, expected);
    }

    #[test]
    fn alias_groups_of_exp1_plan() {
        let plan = fractional_factorial(5, &exp1_generators()).unwrap();
        let groups = alias_structure(&plan);
        assert!(mains_unaliased(&groups));
        let rendered: HashSet<String> = groups
            .iter()
            .map(|g| {
                let mut names: Vec<String> = g.iter().map(|w| word_name(w)).collect();
                names.sort();
                names.join("|")
            })
            .collect();
        assert!(rendered.contains("A|BD|CE"));
        assert!(rendered.contains("AB|D"));
        assert!(rendered.contains("AC|E"));
        assert!(rendered.contains("BC|DE"));
        assert!(rendered.contains("BE|CD"));
    }

    #[test]
    fn alias_structure_of_full_factorial_is_singletons() {
        let plan = full_factorial(3).unwrap();
        let groups = alias_structure(&plan);
        assert!(groups.iter().all(|g| g.len() == 1));
        assert_eq!(groups.len(), 3 + 3);
    }

    #[test]
    fn realize_maps_signs_to_quartiles() {
        let plan = fractional_factorial(5, &exp1_generators()).unwrap();
        let space = dsprites_like_space();
        let mut rng = stream(3, "realize", 0);
        let settings = realize(&plan, &space, 3, &mut rng).unwrap();
        assert_eq!(settings.len(), 24);
        for (i, setting) in settings.iter().enumerate() {
            let row = &plan.runs[i / 3];
            // Orientation (40 levels): quartile size 10.
            let o = setting.level(2);
            if row[2] < 0 {
                assert!(o < 10);
            } else {
                assert!(o >= 30);
            }
            // Shape (3 levels): quartile size 1, so signs map to 0/2.
            let s = setting.level(0);
            assert_eq!(s, if row[0] < 0 { 0 } else { 2 });
        }
    }

    #[test]
    fn realize_on_binary_space_is_exact() {
        let space = FactorSpace::new(vec![
            FactorSpec::new("a", FactorRole::Semantic, 2),
            FactorSpec::new("b", FactorRole::Nuisance, 2),
        ])
        .unwrap();
        let plan = full_factorial(2).unwrap();
        let mut rng = stream(3, "realize", 1);
        let settings = realize(&plan, &space, 1, &mut rng).unwrap();
        let got: Vec<Vec<usize>> = settings.into_iter().map(|s| s.values).collect();
        assert_eq!(got, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn realize_rejects_dimension_mismatch() {
        let plan = full_factorial(3).unwrap();
        let space = dsprites_like_space();
        let mut rng = stream(3, "realize", 2);
        assert!(realize(&plan, &space, 1, &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn design_columns_are_balanced(k in 1usize..8) {
            let plan = full_factorial(k).unwrap();
            for j in 0..k {
                let col = plan.column(j);
                let sum: i32 = col.iter().map(|&s| s as i32).sum();
                prop_assert_eq!(sum, 0);
            }
        }

        #[test]
        fn fractional_columns_balanced_and_mains_orthogonal(base in 3usize..6) {
            // One generated factor: the product of all base factors, a word
            // of length base+1 >= 4.
            let k = base + 1;
            let gen = GeneratorWord::new(base, (0..base).collect()).unwrap();
            let plan = fractional_factorial(k, &[gen]).unwrap();
            for j in 0..k {
                let col = plan.column(j);
                let sum: i32 = col.iter().map(|&s| s as i32).sum();
                prop_assert_eq!(sum, 0);
            }
            for a in 0..k {
                for b in a + 1..k {
                    let dot: i32 = plan
                        .column(a)
                        .iter()
                        .zip(plan.column(b))
                        .map(|(&x, y)| x as i32 * y as i32)
                        .sum();
                    prop_assert_eq!(dot, 0);
                }
            }
        }
    }
}
