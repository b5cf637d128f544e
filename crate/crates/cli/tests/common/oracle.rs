//! Straight-line reference versions of the fusion operators, working on
//! plain `[x1, y1, x2, y2, score]` rows.

pub type Row = [f64; 5];

pub fn iou(a: &Row, b: &Row) -> f64 {
    let iw = a[2].min(b[2]) - a[0].max(b[0]);
    let ih = a[3].min(b[3]) - a[1].max(b[1]);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let ua = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter;
    (inter / ua).min(1.0)
}

/// Score descending, then x1, y1, x2, y2 ascending.
pub fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(|a, b| {
        b[4].partial_cmp(&a[4])
            .unwrap()
            .then(a[0].partial_cmp(&b[0]).unwrap())
            .then(a[1].partial_cmp(&b[1]).unwrap())
            .then(a[2].partial_cmp(&b[2]).unwrap())
            .then(a[3].partial_cmp(&b[3]).unwrap())
    });
}

pub fn soft_nms(rows: &[Row], gaussian: bool, sigma: f64, thr: f64, floor: f64) -> Vec<Row> {
    let mut pool: Vec<Row> = rows.iter().copied().filter(|r| r[4] >= floor).collect();
    let mut out = Vec::new();
    while !pool.is_empty() {
        sort_rows(&mut pool);
        let top = pool.remove(0);
        let mut next = Vec::new();
        for mut r in pool {
            let o = iou(&top, &r);
            let decay = if gaussian {
                (-o * o / sigma).exp()
            } else if o > thr {
                1.0 - o
            } else {
                1.0
            };
            r[4] *= decay;
            if r[4] >= floor {
                next.push(r);
            }
        }
        pool = next;
        out.push(top);
    }
    out
}

/// Weighted boxes fusion over `models` lists with per-model weights.
pub fn wbf(models: &[Vec<Row>], weights: &[f64], match_iou: f64, skip: f64) -> Vec<Row> {
    let t = models.len() as f64;
    let mut pool = Vec::new();
    for (m, rows) in models.iter().enumerate() {
        for r in rows {
            if r[4] >= skip {
                let mut r = *r;
                r[4] *= weights[m];
                pool.push(r);
            }
        }
    }
    sort_rows(&mut pool);
    let mut clusters: Vec<Vec<Row>> = Vec::new();
    let mut fused: Vec<Row> = Vec::new();
    for r in pool {
        let mut best = usize::MAX;
        let mut best_iou = -1.0;
        for (i, f) in fused.iter().enumerate() {
            let o = iou(f, &r);
            if o > best_iou {
                best_iou = o;
                best = i;
            }
        }
        if best != usize::MAX && best_iou > match_iou {
            clusters[best].push(r);
            fused[best] = fuse_cluster(&clusters[best]);
        } else {
            clusters.push(vec![r]);
            fused.push(r);
        }
    }
    let mut out: Vec<Row> = clusters
        .iter()
        .zip(&fused)
        .map(|(c, f)| {
            let n = c.len() as f64;
            let mean = c.iter().map(|r| r[4]).sum::<f64>() / n;
            [f[0], f[1], f[2], f[3], (mean * n.min(t) / t).min(1.0)]
        })
        .collect();
    sort_rows(&mut out);
    out
}

fn fuse_cluster(c: &[Row]) -> Row {
    let total: f64 = c.iter().map(|r| r[4]).sum();
    let mut f = [0.0; 5];
    for k in 0..4 {
        f[k] = if total > 0.0 {
            c.iter().map(|r| r[4] * r[k]).sum::<f64>() / total
        } else {
            c.iter().map(|r| r[k]).sum::<f64>() / c.len() as f64
        };
    }
    f
}

pub fn hflip(rows: &[Row], width: f64) -> Vec<Row> {
    rows.iter().map(|r| [width - r[2], r[1], width - r[0], r[3], r[4]]).collect()
}

/// Soft-NMS per leaf (linear), then WBF across leaves with unit weights.
pub fn ensemble(leaves: &[Vec<Row>], sigma: f64, thr: f64, floor: f64, match_iou: f64) -> Vec<Row> {
    let per: Vec<Vec<Row>> = leaves.iter().map(|l| soft_nms(l, false, sigma, thr, floor)).collect();
    wbf(&per, &vec![1.0; leaves.len()], match_iou, 0.0)
}

/// Pair every expected row with a distinct actual row within `tol` on all
/// five fields. Returns a description of the first mismatch.
pub fn same_rows(expected: &[Row], actual: &[Row], tol: f64) -> Result<(), String> {
    if expected.len() != actual.len() {
        return Err(format!("{} rows expected, {} produced", expected.len(), actual.len()));
    }
    let mut used = vec![false; actual.len()];
    for e in expected {
        let hit = actual.iter().enumerate().position(|(i, a)| {
            !used[i] && e.iter().zip(a).all(|(x, y)| (x - y).abs() <= tol)
        });
        match hit {
            Some(i) => used[i] = true,
            None => return Err(format!("no produced row within {tol} of {e:?}")),
        }
    }
    Ok(())
}
