/// Centered running median over an odd window, mirrored at both ends.
///
/// Keeps the window contents in a sorted buffer; each step removes the
/// outgoing sample and inserts the incoming one by binary search.
pub fn running_median(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 || window <= 1 {
        return x.to_vec();
    }
    let half = (window / 2) as i64;
    let at = |i: i64| -> f64 {
        if n == 1 {
            return x[0];
        }
        let period = 2 * (n as i64 - 1);
        let mut k = i.rem_euclid(period);
        if k >= n as i64 {
            k = period - k;
        }
        x[k as usize]
    };

    let mut sorted: Vec<f64> = (-half..=half).map(at).collect();
    sorted.sort_by(f64::total_cmp);
    let mid = half as usize;
    let mut out = Vec::with_capacity(n);
    out.push(sorted[mid]);
    for i in 1..n as i64 {
        let old = at(i - 1 - half);
        let new = at(i + half);
        let pos = sorted.partition_point(|v| v.total_cmp(&old).is_lt());
        sorted.remove(pos);
        let ins = sorted.partition_point(|v| v.total_cmp(&new).is_lt());
        sorted.insert(ins, new);
        out.push(sorted[mid]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(x: &[f64], window: usize) -> Vec<f64> {
        let n = x.len() as i64;
        let h = (window / 2) as i64;
        (0..n)
            .map(|i| {
                let mut w: Vec<f64> = (i - h..=i + h)
                    .map(|k| {
                        let k = if k < 0 { -k } else { k };
                        let k = if k >= n { 2 * (n - 1) - k } else { k };
                        x[k as usize]
                    })
                    .collect();
                w.sort_by(f64::total_cmp);
                w[h as usize]
            })
            .collect()
    }

    #[test]
    fn matches_brute_force() {
        let x: Vec<f64> = (0..300)
            .map(|i| ((i * 7919) % 101) as f64 - 50.0 + (i as f64 * 0.05).sin())
            .collect();
        for w in [1, 3, 21, 101] {
            assert_eq!(running_median(&x, w), brute(&x, w), "window {w}");
        }
    }

    #[test]
    fn removes_isolated_spike() {
        let mut x = vec![1.0; 50];
        x[25] = 100.0;
        let y = running_median(&x, 5);
        assert!(y.iter().all(|&v| v == 1.0));
    }
}
