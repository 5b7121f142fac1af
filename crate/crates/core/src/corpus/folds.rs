use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Domain, UtteranceRecord};
use crate::error::{Error, Result};
use crate::seed;

pub const NUM_SESSIONS: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    /// 1-based; also the held-out session.
    pub fold_index: u8,
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

/// Leave-one-session-out splits over the real records. Fold `k` tests session
/// `k`; the other sessions are shuffled with a per-fold seed and split 8:2 into
/// train and validation (validation size rounded down). Synthetic records are
/// ignored.
pub fn make_folds(records: &[UtteranceRecord], seed: u64) -> Result<Vec<FoldSplit>> {
    let real: Vec<&UtteranceRecord> = records
        .iter()
        .filter(|r| r.domain == Domain::Real)
        .collect();
    for session in 1..=NUM_SESSIONS {
        if !real.iter().any(|r| r.session == Some(session)) {
            return Err(Error::Validation(format!(
                "session {session} has no utterances"
            )));
        }
    }
    (1..=NUM_SESSIONS)
        .map(|k| {
            let test_ids: Vec<String> = real
                .iter()
                .filter(|r| r.session == Some(k))
                .map(|r| r.id.clone())
                .collect();
            let mut rest: Vec<String> = real
                .iter()
                .filter(|r| r.session != Some(k))
                .map(|r| r.id.clone())
                .collect();
            rest.shuffle(&mut seed::rng_for(seed, u64::from(k)));
            let n_val = rest.len() / 5;
            let train_ids = rest.split_off(n_val);
            Ok(FoldSplit {
                fold_index: k,
                train_ids,
                val_ids: rest,
                test_ids,
            })
        })
        .collect()
}
