//! Whole-suite evolutionary search.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::builder::{repair_sequence, Target, TestBuilder};
use super::feedback::PriorRun;
use super::input::{synth_input, SynthArg};
use super::random::{extend_once, random_test, Archive};
use super::{module_rng, GenConfig, SynthError};
use crate::model::{KnowledgeBase, ParamConstraint};
use crate::oracle::{check_test, model_coverage_of};
use crate::suite::{ArgValue, Backend, Binding, Statement, TestCase, TestSuite};
use crate::usage::PatternIndex;

const INITIAL_TESTS: usize = 4;

/// Compared lexicographically: executed branches, then proxy score, then
/// fewer statements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fitness {
    pub branches: usize,
    pub proxy: f64,
    pub statements: usize,
}

impl Fitness {
    pub fn cmp(&self, other: &Fitness) -> Ordering {
        self.branches
            .cmp(&other.branches)
            .then(self.proxy.total_cmp(&other.proxy))
            .then(other.statements.cmp(&self.statements))
    }
}

struct Search<'a> {
    target: Target<'a>,
    patterns: &'a PatternIndex,
    fitness_patterns: PatternIndex,
    prior: Option<&'a PriorRun>,
    cfg: &'a GenConfig,
    rng: ChaCha8Rng,
    archive: Archive,
}

#[derive(Clone)]
struct Individual {
    tests: Vec<TestCase>,
    fitness: Fitness,
}

impl Search<'_> {
    fn fitness(&self, tests: &[TestCase]) -> Fitness {
        let cov = model_coverage_of(
            tests,
            &self.target.module,
            self.target.kb,
            &self.fitness_patterns,
            self.cfg.proxy_weights,
        );
        Fitness {
            branches: self.prior.map_or(0, |p| p.branches_of(tests).len()),
            proxy: cov.score,
            statements: tests.iter().map(|t| t.statements.len()).sum(),
        }
    }

    fn fresh_test(&mut self) -> Result<Option<TestCase>, SynthError> {
        // Building a test is free; only evaluations spend budget.
        let mut unmetered = 0;
        let b = random_test(
            &self.target,
            self.patterns,
            &self.archive,
            &mut self.rng,
            self.cfg,
            &mut unmetered,
            u64::MAX,
        )?;
        Ok(b.map(|b| self.wrap(b.finish())))
    }

    fn wrap(&self, statements: Vec<Statement>) -> TestCase {
        TestCase {
            id: String::new(),
            statements,
            seed: self.cfg.seed,
            backend: Backend::Search,
        }
    }

    fn initial_suite(&mut self) -> Result<Vec<TestCase>, SynthError> {
        let n = self.rng.gen_range(1..=INITIAL_TESTS);
        let mut tests = Vec::new();
        for _ in 0..n {
            if let Some(t) = self.fresh_test()? {
                tests.push(t);
            }
        }
        Ok(tests)
    }

    fn tournament<'p>(&mut self, pop: &'p [Individual]) -> &'p Individual {
        let a = &pop[self.rng.gen_range(0..pop.len())];
        let b = &pop[self.rng.gen_range(0..pop.len())];
        if b.fitness.cmp(&a.fitness) == Ordering::Greater {
            b
        } else {
            a
        }
    }

    fn crossover(&mut self, a: &[TestCase], b: &[TestCase]) -> (Vec<TestCase>, Vec<TestCase>) {
        let i = self.rng.gen_range(0..=a.len());
        let j = self.rng.gen_range(0..=b.len());
        let c1 = a[..i].iter().chain(&b[j..]).cloned().collect();
        let c2 = b[..j].iter().chain(&a[i..]).cloned().collect();
        (c1, c2)
    }

    fn mutate(&mut self, tests: &mut Vec<TestCase>) -> Result<(), SynthError> {
        for t in tests.iter_mut() {
            if !self.rng.gen_bool(self.cfg.mutation_rate) {
                continue;
            }
            let mutated = match self.rng.gen_range(0..3) {
                0 => self.add_statement(t)?,
                1 => self.delete_statement(t),
                _ => self.regenerate_arg(t)?,
            };
            if let Some(m) = mutated {
                *t = m;
            }
        }
        if tests.len() < self.cfg.max_tests && self.rng.gen_bool(self.cfg.mutation_rate) {
            if let Some(t) = self.fresh_test()? {
                tests.push(t);
            }
        }
        // Validity feedback and deduplication.
        let mut seen = BTreeSet::new();
        tests.retain(|t| {
            t.check_structure().is_ok() && check_test(t, self.target.kb).is_valid() && seen.insert(t.fingerprint())
        });
        tests.truncate(self.cfg.max_tests);
        for t in tests.iter() {
            self.archive.record(&t.statements);
        }
        Ok(())
    }

    fn add_statement(&mut self, t: &TestCase) -> Result<Option<TestCase>, SynthError> {
        let mut b = TestBuilder::from_test(t);
        if b.call_count() >= self.cfg.max_sequence_length {
            return Ok(None);
        }
        let (mut unmetered, mut rejections) = (0, 0);
        let grown = extend_once(
            &mut b,
            &self.target,
            self.patterns,
            &self.archive,
            &mut self.rng,
            self.cfg,
            &mut unmetered,
            u64::MAX,
            &mut rejections,
        )?;
        Ok(grown.then(|| self.wrap(b.finish())))
    }

    fn delete_statement(&mut self, t: &TestCase) -> Option<TestCase> {
        let calls: Vec<usize> = (0..t.statements.len()).filter(|&i| t.statements[i].callee().is_some()).collect();
        if calls.len() < 2 {
            return None;
        }
        let victim = *calls.choose(&mut self.rng)?;
        let mut cut = t.clone();
        cut.statements.remove(victim);
        let repaired = repair_sequence(&cut);
        (!repaired.statements.is_empty()).then_some(repaired)
    }

    fn regenerate_arg(&mut self, t: &TestCase) -> Result<Option<TestCase>, SynthError> {
        let mut b = TestBuilder::from_test(t);
        let sites: Vec<(usize, usize)> = b
            .statements
            .iter()
            .enumerate()
            .flat_map(|(i, s)| (0..s.args().len()).map(move |j| (i, j)))
            .collect();
        let Some(&(i, j)) = sites.choose(&mut self.rng) else {
            return Ok(None);
        };
        let callee = b.statements[i].callee().cloned().unwrap_or_default();
        let Some(spec) = self.target.spec(&callee) else {
            return Ok(None);
        };
        let param = match &b.statements[i].args()[j].binding {
            Binding::Position(k) => spec.bindable_params().nth(*k),
            Binding::Keyword(name) => spec.param(name),
        };
        let Some(param) = param else { return Ok(None) };
        let undefined = ParamConstraint::default();
        let c = self.target.constraint(&callee, &param.name).unwrap_or(&undefined);
        let value = match synth_input(param, c, &[], self.archive.values(), &mut self.rng, self.cfg) {
            Ok(SynthArg::Fresh(v)) => v,
            Ok(SynthArg::Omit) if !param.is_required && matches!(b.statements[i].args()[j].binding, Binding::Keyword(_)) => {
                b.statements[i].args_mut().expect("call").remove(j);
                return Ok(Some(self.finish_regenerated(b)));
            }
            Ok(_) => return Ok(None),
            Err(SynthError::Contradiction(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let var = b.fresh_var();
        b.statements[i].args_mut().expect("call")[j].value = ArgValue::Var(var.clone());
        b.statements.insert(i, Statement::AssignLiteral { target: var, value });
        Ok(Some(self.finish_regenerated(b)))
    }

    /// Drops literals nothing reads any more and closes the test again.
    fn finish_regenerated(&self, mut b: TestBuilder) -> TestCase {
        let used: BTreeSet<String> = b.statements.iter().flat_map(|s| s.uses()).map(str::to_string).collect();
        b.statements
            .retain(|s| !matches!(s, Statement::AssignLiteral { target, .. } if !used.contains(target)));
        self.wrap(b.finish())
    }
}

/// Evolves a population of suites for `module` and returns the fittest
/// suite seen. Each fitness evaluation spends one step. With `prior`, the
/// earlier run's tests seed one extra individual and executed branch
/// coverage leads the fitness.
pub fn gen_search_suite(
    kb: &KnowledgeBase,
    patterns: &PatternIndex,
    module: &str,
    cfg: &GenConfig,
    prior: Option<&PriorRun>,
) -> Result<TestSuite, SynthError> {
    let target = Target::new(kb, module)?;
    let mut suite = TestSuite::new(module, Backend::Search, cfg.seed, true);
    let limit = cfg.budget_steps();
    if limit == 0 {
        return Ok(suite);
    }
    let mut s = Search {
        target,
        patterns,
        fitness_patterns: if cfg.patterns_in_fitness { patterns.clone() } else { PatternIndex::empty() },
        prior,
        cfg,
        rng: module_rng(cfg.seed, module),
        archive: Archive::default(),
    };
    let mut steps = 0u64;
    let mut population: Vec<Individual> = Vec::with_capacity(cfg.population_size + 1);
    let mut seeds: Vec<Vec<TestCase>> = Vec::new();
    if let Some(p) = prior {
        let mut kept: Vec<TestCase> = p
            .tests
            .iter()
            .filter(|t| target_module_test(t, &s.target) && t.check_structure().is_ok())
            .cloned()
            .collect();
        kept.truncate(cfg.max_tests);
        if !kept.is_empty() {
            seeds.push(kept);
        }
    }
    for _ in 0..cfg.population_size {
        seeds.push(s.initial_suite()?);
    }
    for tests in seeds {
        if steps >= limit {
            break;
        }
        steps += 1;
        s.archive.record(&tests.iter().flat_map(|t| t.statements.clone()).collect::<Vec<_>>());
        let fitness = s.fitness(&tests);
        population.push(Individual { tests, fitness });
    }
    let mut best = fittest(&population).clone();

    while steps < limit {
        let mut next = vec![fittest(&population).clone()];
        while next.len() < cfg.population_size && steps < limit {
            let p1 = s.tournament(&population).tests.clone();
            let p2 = s.tournament(&population).tests.clone();
            let (mut c1, mut c2) = if s.rng.gen_bool(cfg.crossover_rate) {
                s.crossover(&p1, &p2)
            } else {
                (p1, p2)
            };
            for child in [&mut c1, &mut c2] {
                s.mutate(child)?;
            }
            for tests in [c1, c2] {
                if next.len() >= cfg.population_size || steps >= limit {
                    break;
                }
                steps += 1;
                let fitness = s.fitness(&tests);
                let ind = Individual { tests, fitness };
                if ind.fitness.cmp(&best.fitness) == Ordering::Greater {
                    best = ind.clone();
                }
                next.push(ind);
            }
        }
        population = next;
    }

    suite.tests = best.tests;
    for (i, t) in suite.tests.iter_mut().enumerate() {
        t.id = format!("{i:04}");
        t.seed = cfg.seed;
        t.backend = Backend::Search;
    }
    Ok(suite)
}

fn target_module_test(t: &TestCase, target: &Target) -> bool {
    t.calls().iter().any(|c| target.spec(c).is_some())
}

fn fittest(pop: &[Individual]) -> &Individual {
    // Earliest wins ties so the result does not depend on sort stability.
    pop.iter()
        .reduce(|a, b| if b.fitness.cmp(&a.fitness) == Ordering::Greater { b } else { a })
        .expect("population is nonempty")
}
