pub mod usc;

use std::path::Path;
use std::process::{Command, Output};

use consensus_select::candidates::{write_candidate_sets, Candidate, CandidateSet};

pub const BIN: &str = env!("CARGO_BIN_EXE_consensus-select");

pub fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("CONSENSUS_SELECT_SEED").env_remove("USC_AUTH_TOKEN").output().expect("spawn CLI")
}

pub fn cli_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("CONSENSUS_SELECT_SEED").env_remove("USC_AUTH_TOKEN");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn CLI")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Rows `L` with `L L^T = gram`, for a positive definite `gram`.
pub fn cholesky(gram: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = gram.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][j] = (gram[i][i] - s).sqrt();
            } else {
                l[i][j] = (gram[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

/// Four responses whose embeddings realize the bridge similarity matrix:
/// 0 and 1 are close, 2 sits between them and 3, and 3 is far from 0 and 1.
pub fn bridge_set() -> CandidateSet {
    let gram = vec![
        vec![1.0, 0.8, 0.5, 0.0],
        vec![0.8, 1.0, 0.5, 0.0],
        vec![0.5, 0.5, 1.0, 0.5],
        vec![0.0, 0.0, 0.5, 1.0],
    ];
    let rows = cholesky(&gram);
    let responses = rows
        .into_iter()
        .enumerate()
        .map(|(i, v)| Candidate { embedding: Some(v), ..Candidate::new(format!("response {i} \\boxed{{{i}}}")) })
        .collect();
    CandidateSet { question_id: "bridge".into(), responses }
}

/// Small deterministic LCG so fixtures do not depend on a RNG crate.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_f64() * n as f64) as usize % n
    }
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Questions with boxed answers, a gold answer and answer-clustered embeddings.
pub fn sample_sets(questions: usize, per_question: usize, with_embeddings: bool) -> Vec<CandidateSet> {
    let dim = 8;
    let mut rng = Lcg(7);
    let words = ["carry", "sum", "ratio", "area", "digits", "total", "split", "remainder"];
    (0..questions)
        .map(|q| {
            let centers: Vec<Vec<f64>> = (0..4).map(|_| unit((0..dim).map(|_| rng.next_f64() - 0.5).collect())).collect();
            let gold = (q % 3) as u32 + 10;
            let responses = (0..per_question)
                .map(|r| {
                    let answer = if r % 3 == 2 { gold + 1 + rng.below(3) as u32 } else { gold };
                    let k = (answer - gold) as usize;
                    let mut text: Vec<&str> = (0..5).map(|_| words[rng.below(words.len())]).collect();
                    text.push(words[k]);
                    let text = format!("{} so the answer is \\boxed{{{answer}}}", text.join(" "));
                    let embedding = with_embeddings
                        .then(|| unit(centers[k].iter().map(|c| c + 0.1 * (rng.next_f64() - 0.5)).collect()));
                    Candidate { text, embedding, gold_answer: (r == 0).then(|| gold.to_string()) }
                })
                .collect();
            CandidateSet { question_id: format!("q{q:03}"), responses }
        })
        .collect()
}

pub fn write_sets(path: &Path, sets: &[CandidateSet]) {
    write_candidate_sets(path, sets).expect("write fixture");
}
