//! One Monte Carlo trial: sample the construction, apply the procedure.
//!
//! Randomness comes from ChaCha8 used as a counter-based generator. The key
//! holds the master seed and the sequence length, the 64-bit stream id is
//! the trial index, and the block counter advances with the draw index. Two
//! trials therefore never share a keystream block, and a trial's draws do
//! not depend on which worker runs it.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::construction::{labels, resample, ConstructionSpec, ExactBernoulli};
use crate::seqstep::{reject_with, CompetitionSequence, ProcedureParams, Threshold, TrialOutcome, Win};
use crate::Error;

const DOMAIN_TAG: [u8; 8] = *b"sssplus1";

/// The generator for trial `trial` of an experiment on `n` hypotheses.
pub fn trial_stream(master_seed: u64, n: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&n.to_le_bytes());
    key[16..24].copy_from_slice(&DOMAIN_TAG);
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Reusable state for running many trials of one configuration.
#[derive(Debug, Clone)]
pub struct TrialRunner {
    n: u64,
    threshold: Threshold,
    coin: ExactBernoulli,
    seq: CompetitionSequence,
}

impl TrialRunner {
    pub fn new(spec: &ConstructionSpec, params: &ProcedureParams) -> Result<Self, Error> {
        params.require_construction()?;
        if (spec.a, spec.b) != (params.a(), params.b()) {
            return Err(Error::Mismatch {
                spec: (spec.a, spec.b),
                params: (params.a(), params.b()),
            });
        }
        let labels = labels(spec);
        let seq = CompetitionSequence::new(alloc::vec![Win::Target; labels.len()], labels)?;
        Ok(Self {
            n: spec.n,
            threshold: params.threshold(),
            coin: ExactBernoulli::new(params.c())?,
            seq,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Runs trial `trial` under `master_seed`.
    pub fn run(&mut self, master_seed: u64, trial: u64) -> TrialOutcome {
        let mut rng = trial_stream(master_seed, self.n, trial);
        self.run_with(&mut rng)
    }

    /// Runs one trial drawing from an arbitrary generator.
    pub fn run_with<R: rand_core::RngCore + ?Sized>(&mut self, rng: &mut R) -> TrialOutcome {
        resample(&mut self.seq, &self.coin, rng);
        reject_with(self.seq.wins(), self.seq.labels(), &self.threshold)
    }

    /// The sequence drawn by the most recent trial.
    pub fn last_sequence(&self) -> &CompetitionSequence {
        &self.seq
    }
}
