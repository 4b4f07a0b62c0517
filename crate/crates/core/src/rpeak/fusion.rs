use crate::error::{Error, Result};
use crate::io::PeakList;
use crate::stats;

/// Peaks from different lists closer than this vote together.
pub const VOTE_WINDOW_MS: f64 = 50.0;

/// RR-interval standard deviation; lists too short to have one sort last.
fn rr_spread(p: &PeakList) -> f64 {
    let rr = p.rr_intervals();
    if rr.len() < 2 {
        return f64::INFINITY;
    }
    stats::std_dev(&rr)
}

fn content_cmp(a: &PeakList, b: &PeakList) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.times()
            .iter()
            .zip(b.times())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

/// Indices of the `keep` lists with the steadiest rhythm.
///
/// Ties are broken on list content, so the selection does not depend on the
/// order the lists arrive in.
pub fn steadiest(lists: &[PeakList], keep: usize) -> Vec<usize> {
    let spread: Vec<f64> = lists.iter().map(rr_spread).collect();
    let mut idx: Vec<usize> = (0..lists.len()).collect();
    idx.sort_by(|&a, &b| {
        spread[a]
            .total_cmp(&spread[b])
            .then_with(|| content_cmp(&lists[a], &lists[b]))
            .then(a.cmp(&b))
    });
    idx.truncate(keep.min(lists.len()));
    idx
}

/// Majority vote over the `keep` steadiest lists.
///
/// Votes are gathered greedily in time: a cluster opens at the earliest
/// unclaimed peak and takes at most one peak per list within
/// [`VOTE_WINDOW_MS`] of it. Clusters with at least `⌈keep/2⌉` members
/// yield one peak at the median of their times.
pub fn fuse_peaks(lists: &[PeakList], keep: usize) -> Result<PeakList> {
    if lists.is_empty() {
        return Err(Error::arg("no peak lists to fuse"));
    }
    if keep == 0 {
        return Err(Error::arg("fusion must keep at least one list"));
    }
    if keep > lists.len() {
        log::warn!(
            "fusion asked to keep {keep} lists but only {} exist; keeping all",
            lists.len()
        );
    }
    let chosen = steadiest(lists, keep);
    let need = chosen.len().div_ceil(2);

    let mut pool: Vec<(f64, usize)> = chosen
        .iter()
        .enumerate()
        .flat_map(|(slot, &i)| lists[i].times().iter().map(move |&t| (t, slot)))
        .collect();
    pool.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut used = vec![false; pool.len()];
    let mut fused: Vec<(f64, usize)> = Vec::new();
    for start in 0..pool.len() {
        if used[start] {
            continue;
        }
        let anchor = pool[start].0;
        let mut seen = vec![false; chosen.len()];
        let mut members = Vec::new();
        for j in start..pool.len() {
            let (t, slot) = pool[j];
            if t > anchor + VOTE_WINDOW_MS {
                break;
            }
            if used[j] || seen[slot] {
                continue;
            }
            seen[slot] = true;
            used[j] = true;
            members.push(t);
        }
        if members.len() >= need {
            let t = stats::median(&members).expect("cluster is non-empty");
            match fused.last_mut() {
                // two clusters straddling one beat: keep the better supported
                Some(last) if t - last.0 < VOTE_WINDOW_MS => {
                    if members.len() > last.1 {
                        *last = (t, members.len());
                    }
                }
                _ => fused.push((t, members.len())),
            }
        }
    }
    PeakList::new(fused.into_iter().map(|f| f.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(v: &[f64]) -> PeakList {
        PeakList::new(v.to_vec()).unwrap()
    }

    #[test]
    fn unanimous() {
        let a = pl(&[1000.0, 2000.0, 3000.0, 4000.0]);
        let lists = vec![a.clone(); 5];
        assert_eq!(fuse_peaks(&lists, 5).unwrap(), a);
    }

    #[test]
    fn majority_rule() {
        let a = pl(&[1000.0, 2000.0, 3000.0]);
        let b = pl(&[1000.0, 2000.0, 3000.0, 3500.0]);
        let lists = vec![a.clone(), a.clone(), a.clone(), b.clone(), b];
        assert_eq!(fuse_peaks(&lists, 5).unwrap(), a);
    }

    #[test]
    fn keep_is_clamped() {
        let a = pl(&[1000.0, 2000.0, 3000.0]);
        assert_eq!(fuse_peaks(&[a.clone(), a.clone()], 5).unwrap(), a);
        assert!(fuse_peaks(&[a], 0).is_err());
        assert!(fuse_peaks(&[], 3).is_err());
    }

    #[test]
    fn steadiest_lists_win() {
        let steady = pl(&[1000.0, 2000.0, 3000.0, 4000.0, 5000.0]);
        let erratic = pl(&[1000.0, 1400.0, 3000.0, 3100.0, 5000.0]);
        let lists = vec![erratic.clone(), steady.clone(), erratic, steady.clone()];
        assert_eq!(steadiest(&lists, 2), vec![1, 3]);
        assert_eq!(fuse_peaks(&lists, 2).unwrap(), steady);
    }

    #[test]
    fn jitter_is_averaged_out() {
        let offsets = [-20.0, -10.0, 0.0, 10.0, 20.0];
        let lists: Vec<PeakList> = (0..5)
            .map(|k| {
                pl(&(0..10)
                    .map(|i| 500.0 + 800.0 * i as f64 + offsets[(i + k) % 5])
                    .collect::<Vec<_>>())
            })
            .collect();
        let got = fuse_peaks(&lists, 5).unwrap();
        assert_eq!(got.len(), 10);
        for (i, t) in got.times().iter().enumerate() {
            assert!((t - (500.0 + 800.0 * i as f64)).abs() <= 10.0);
        }
    }
}
