use idfactor::continuous::{audit_plan, plan_cover, stitch_gap, CoverConfig};
use idfactor::ensemble::{random_normalized_path, rotation_path, seeded};
use idfactor::{verify_path, CoverPlan, FactorPath, IndexSet, Matrix, MatrixPath};

fn ip(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Max of `|⟨a_i(t), a_j(t)⟩|` over `[ta, tb]`, from the Bernstein form of
/// the quadratic on every segment that meets the range.
fn oracle_max(path: &MatrixPath<f64>, i: usize, j: usize, ta: f64, tb: f64) -> f64 {
    let bp = path.breakpoints();
    let mut best: f64 = 0.0;
    for k in 0..path.segments() {
        let (a, b) = (bp[k], bp[k + 1]);
        if b < ta || a > tb {
            continue;
        }
        let (x, y) = (path.frame(k), path.frame(k + 1));
        let p00 = ip(x.col(i), x.col(j));
        let p11 = ip(y.col(i), y.col(j));
        let mid = ip(x.col(i), y.col(j)) + ip(y.col(i), x.col(j));
        let f = |s: f64| (1.0 - s) * (1.0 - s) * p00 + s * (1.0 - s) * mid + s * s * p11;
        let s0 = ((ta.max(a) - a) / (b - a)).clamp(0.0, 1.0);
        let s1 = ((tb.min(b) - a) / (b - a)).clamp(0.0, 1.0);
        best = best.max(f(s0).abs()).max(f(s1).abs());
        let c2 = p00 + p11 - mid;
        if c2 != 0.0 {
            let v = (2.0 * p00 - mid) / (2.0 * c2);
            if v > s0 && v < s1 {
                best = best.max(f(v).abs());
            }
        }
    }
    best
}

fn pairs(f: &IndexSet, g: &IndexSet) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in f.iter() {
        for j in g.iter() {
            if i < j || (i > j && !f.contains(j)) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Rechecks (b), (d) and interleaving of a plan with [`oracle_max`].
fn recheck(path: &MatrixPath<f64>, plan: &CoverPlan<f64>) {
    let eps = plan.epsilon;
    assert_eq!(plan.nodes.first(), Some(&path.domain().0));
    assert_eq!(plan.nodes.last(), Some(&path.domain().1));
    for (m, f) in plan.families.iter().enumerate() {
        assert_eq!(f.len(), plan.n);
        for (i, j) in pairs(f, f) {
            let v = oracle_max(path, i, j, plan.nodes[m], plan.nodes[m + 1]);
            assert!(v < eps, "family {m} pair ({i}, {j}) reaches {v}");
        }
    }
    for (b, g) in plan.bridges.iter().enumerate() {
        let (s, u) = plan.windows[b];
        let (left, tm, right) = (plan.nodes[b], plan.nodes[b + 1], plan.nodes[b + 2]);
        assert!(left < s && s < tm && tm < u && u < right);
        if let Some(&(next_s, _)) = plan.windows.get(b + 1) {
            assert!(u < next_s);
        }
        let (fa, fb) = (&plan.families[b], &plan.families[b + 1]);
        assert!(g.is_disjoint(fa) && g.is_disjoint(fb));
        let all = g.union(fa).union(fb);
        for (i, j) in pairs(g, &all) {
            let v = oracle_max(path, i, j, s, u);
            assert!(v < eps, "bridge {b} pair ({i}, {j}) reaches {v} on ({s}, {u})");
        }
    }
    assert!(audit_plan(path, plan).is_empty(), "{:?}", audit_plan(path, plan));
}

fn certify(path: &MatrixPath<f64>, plan: CoverPlan<f64>, grid: usize) -> f64 {
    let gap = stitch_gap(&plan, path).unwrap();
    assert!(gap <= 1e-12, "stitch gap {gap}");
    let fp = FactorPath::from_plan(path, plan).unwrap();
    let cert = verify_path(path, &fp, grid, 1e-9).unwrap();
    assert!(cert.pass, "{}", cert.to_text());
    assert!(cert.max_dev <= 1e-9);
    cert.max_product
}

/// Identity, identity, then the second column tilted onto the first so
/// that `⟨a_1, a_2⟩` climbs to `1/3` on the last segment.
fn three_frame_path(big_n: usize) -> MatrixPath<f64> {
    let s: f64 = 0.5;
    let c = (1.0 + s).sqrt().recip();
    let mut last = Matrix::identity(big_n);
    last[(0, 0)] = c;
    last[(0, 1)] = c * s;
    last[(1, 1)] = c * (1.0 - s * s).sqrt();
    MatrixPath::from_frames(vec![0.0, 0.5, 1.0], vec![Matrix::identity(big_n), Matrix::identity(big_n), last]).unwrap()
}

#[test]
fn three_frame_path_needs_two_intervals() {
    let path = three_frame_path(1000);
    let plan = plan_cover(&path, 2, 0.1, &CoverConfig::default()).unwrap();
    assert!(plan.intervals() >= 2, "{}", plan.to_text());
    assert_eq!(plan.families[0], IndexSet::from_one_based(&[1, 2]).unwrap());
    assert!(plan.families.windows(2).all(|w| w[0] != w[1]));
    // the first node sits where ⟨a_1, a_2⟩ reaches ε, up to the bisection resolution
    assert!(oracle_max(&path, 0, 1, 0.0, plan.nodes[1]) < 0.1);
    assert!(oracle_max(&path, 0, 1, 0.0, plan.nodes[1] + 2e-6) >= 0.1);
    for &(s, u) in &plan.windows {
        assert!(s > plan.nodes[0] && u < plan.nodes[plan.nodes.len() - 1]);
    }
    recheck(&path, &plan);
    certify(&path, plan, 1001);
}

#[test]
fn rotation_path_keeps_one_family() {
    let path: MatrixPath<f64> = rotation_path(1000, 8, std::f64::consts::FRAC_PI_2).unwrap();
    assert!(path.path_norm_bound(1e-12).unwrap() <= 1.0 + 1e-12);
    let chord = (std::f64::consts::FRAC_PI_2 / 16.0).cos();
    assert!((path.path_theta() - chord).abs() <= 1e-12);
    let plan = plan_cover(&path, 2, 0.1, &CoverConfig::default()).unwrap();
    assert_eq!(plan.intervals(), 1);
    recheck(&path, &plan);
    let product = certify(&path, plan, 801);
    assert!(product <= 2.0 / chord);
}

#[test]
fn random_path_plan_rechecks_exactly() {
    let mut rng = seeded(2024);
    let path: MatrixPath<f64> = random_normalized_path(400, 50, 0.9, 20, &mut rng).unwrap();
    let theta = path.path_theta();
    assert!(theta >= 0.9 - 1e-9);
    assert!(path.path_norm_bound(1e-12).unwrap() <= 1.0 + 1e-9);
    let plan = plan_cover(&path, 2, 0.16, &CoverConfig::default()).unwrap();
    recheck(&path, &plan);
    let product = certify(&path, plan, 401);
    assert!(product <= 2.0 / theta + 1e-9);
}
