//! Linear-chain operations over two labels with dense per-position scores.
//!
//! Shared by the feature-based CRF and the neural CRF head. All routines
//! work in log space; `emit[t][y]` is the unary score of label `y` at
//! position `t` and `trans[j][k]` the score of the transition `j -> k`.

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m.is_infinite() && m < 0.0 {
        return f64::NEG_INFINITY;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Score of one labeling.
pub fn sequence_score(emit: &[[f64; 2]], trans: &[[f64; 2]; 2], labels: &[bool]) -> f64 {
    let mut score = 0.0;
    let mut prev: Option<usize> = None;
    for (t, &l) in labels.iter().enumerate() {
        let y = l as usize;
        score += emit[t][y];
        if let Some(p) = prev {
            score += trans[p][y];
        }
        prev = Some(y);
    }
    score
}

/// Log of the partition function, by the forward recursion.
pub fn log_partition(emit: &[[f64; 2]], trans: &[[f64; 2]; 2]) -> f64 {
    if emit.is_empty() {
        return 0.0;
    }
    let mut alpha = emit[0];
    for e in &emit[1..] {
        let mut next = [0.0f64; 2];
        for (y, next_y) in next.iter_mut().enumerate() {
            *next_y = e[y]
                + log_sum_exp2(alpha[0] + trans[0][y], alpha[1] + trans[1][y]);
        }
        alpha = next;
    }
    log_sum_exp2(alpha[0], alpha[1])
}

/// Highest-scoring labeling. Ties break toward label 0.
pub fn viterbi(emit: &[[f64; 2]], trans: &[[f64; 2]; 2]) -> Vec<bool> {
    let n = emit.len();
    if n == 0 {
        return Vec::new();
    }
    let mut delta = vec![[0.0f64; 2]; n];
    let mut back = vec![[0usize; 2]; n];
    delta[0] = emit[0];
    for t in 1..n {
        for y in 0..2 {
            let from0 = delta[t - 1][0] + trans[0][y];
            let from1 = delta[t - 1][1] + trans[1][y];
            // strict '>' keeps the lower previous label on ties
            let (best, arg) = if from1 > from0 { (from1, 1) } else { (from0, 0) };
            delta[t][y] = emit[t][y] + best;
            back[t][y] = arg;
        }
    }
    let mut y = usize::from(delta[n - 1][1] > delta[n - 1][0]);
    let mut labels = vec![false; n];
    labels[n - 1] = y == 1;
    for t in (1..n).rev() {
        y = back[t][y];
        labels[t - 1] = y == 1;
    }
    labels
}

/// Posterior node and edge marginals from the forward-backward recursion.
///
/// Returns `(node, edge, log_z)` where `node[t][y] = P(y_t = y)` and
/// `edge[t][j][k] = P(y_t = j, y_{t+1} = k)` for `t < n-1`.
#[allow(clippy::type_complexity)]
pub fn marginals(
    emit: &[[f64; 2]],
    trans: &[[f64; 2]; 2],
) -> (Vec<[f64; 2]>, Vec<[[f64; 2]; 2]>, f64) {
    let n = emit.len();
    if n == 0 {
        return (Vec::new(), Vec::new(), 0.0);
    }
    let mut alpha = vec![[0.0f64; 2]; n];
    alpha[0] = emit[0];
    for t in 1..n {
        for y in 0..2 {
            alpha[t][y] = emit[t][y]
                + log_sum_exp2(
                    alpha[t - 1][0] + trans[0][y],
                    alpha[t - 1][1] + trans[1][y],
                );
        }
    }
    let mut beta = vec![[0.0f64; 2]; n];
    for t in (0..n - 1).rev() {
        for y in 0..2 {
            beta[t][y] = log_sum_exp2(
                trans[y][0] + emit[t + 1][0] + beta[t + 1][0],
                trans[y][1] + emit[t + 1][1] + beta[t + 1][1],
            );
        }
    }
    let log_z = log_sum_exp2(alpha[n - 1][0], alpha[n - 1][1]);
    let node: Vec<[f64; 2]> = (0..n)
        .map(|t| {
            [
                (alpha[t][0] + beta[t][0] - log_z).exp(),
                (alpha[t][1] + beta[t][1] - log_z).exp(),
            ]
        })
        .collect();
    let mut edge = vec![[[0.0f64; 2]; 2]; n.saturating_sub(1)];
    for (t, e) in edge.iter_mut().enumerate() {
        for j in 0..2 {
            for k in 0..2 {
                e[j][k] =
                    (alpha[t][j] + trans[j][k] + emit[t + 1][k] + beta[t + 1][k] - log_z).exp();
            }
        }
    }
    (node, edge, log_z)
}

/// Negative conditional log-likelihood of a gold labeling.
pub fn sequence_nll(emit: &[[f64; 2]], trans: &[[f64; 2]; 2], gold: &[bool]) -> f64 {
    log_partition(emit, trans) - sequence_score(emit, trans, gold)
}
