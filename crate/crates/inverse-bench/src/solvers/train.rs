//! Small pieces shared by every training loop.

use crate::rng::Rng;

/// Per-epoch training trace. `val_losses` holds the solver's own validation
/// objective; `best_epoch` indexes the snapshot that was kept.
#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub train_losses: Vec<f64>,
    pub val_losses: Vec<f64>,
    pub best_epoch: usize,
}

/// Shuffled minibatch index lists for one epoch. Batches of fewer than two
/// rows are folded into the previous batch so batchnorm always sees a pair.
pub fn epoch_batches(n: usize, batch_size: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut batches: Vec<Vec<usize>> = order
        .chunks(batch_size.max(1))
        .map(|chunk| chunk.to_vec())
        .collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() < 2) {
        let tail = batches.pop().unwrap();
        batches.last_mut().unwrap().extend(tail);
    }
    batches
}

/// Gather `rows` from a flat row-major matrix.
pub fn gather_rows(flat: &[f64], width: usize, rows: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len() * width);
    for &r in rows {
        out.extend_from_slice(&flat[r * width..(r + 1) * width]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_cover_every_row_once() {
        let mut rng = Rng::new(1);
        let batches = epoch_batches(17, 5, &mut rng);
        let mut seen: Vec<usize> = batches.concat();
        seen.sort_unstable();
        assert_eq!(seen, (0..17).collect::<Vec<_>>());
        assert!(batches.iter().all(|b| b.len() >= 2));
    }

    #[test]
    fn gather_pulls_the_right_rows() {
        let flat = [0.0, 1.0, 10.0, 11.0, 20.0, 21.0];
        assert_eq!(gather_rows(&flat, 2, &[2, 0]), vec![20.0, 21.0, 0.0, 1.0]);
    }
}
