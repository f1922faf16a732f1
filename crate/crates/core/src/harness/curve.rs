use super::run::RunLog;

/// One point per `interval` environment steps: the mean score of complete
/// episodes that ended since the previous point, carrying the last value
/// across empty intervals. Before the first episode ends the value is 0.
pub fn learning_curve(log: &RunLog, interval: u64) -> Vec<(u64, f64)> {
    assert!(interval > 0, "curve interval must be positive");
    let mut ends: Vec<(u64, i64)> = log.complete_episodes().map(|e| (e.end_step, e.score)).collect();
    ends.sort_by_key(|&(s, _)| s);
    let mut out = Vec::new();
    let mut last = 0.0;
    let mut i = 0;
    let mut boundary = interval;
    while boundary <= log.total_steps {
        let (mut sum, mut n) = (0i64, 0usize);
        while i < ends.len() && ends[i].0 <= boundary {
            sum += ends[i].1;
            n += 1;
            i += 1;
        }
        if n > 0 {
            last = sum as f64 / n as f64;
        }
        out.push((boundary, last));
        boundary += interval;
    }
    out
}
