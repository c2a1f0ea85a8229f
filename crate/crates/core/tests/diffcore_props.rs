use proptest::prelude::*;
use tf4ctr::diffcore::{
    grad_check, xavier_bound, xavier_init, GradCheckOptions, Graph, NodeId, ParamStore, Rng, Tensor,
};

fn opts() -> GradCheckOptions {
    GradCheckOptions {
        eps: 1e-6,
        tol: 1e-5,
        max_probes_per_param: None,
    }
}

fn rand_tensor(rng: &mut Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    Tensor::new(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.uniform_range(lo, hi)).collect(),
    )
    .unwrap()
}

/// Plants a deterministic weighting so the scalar output depends on every entry.
fn weighted_sum(g: &mut Graph<'_>, x: NodeId, seed: u64) -> tf4ctr::Result<NodeId> {
    let shape = g.value(x).shape();
    let mut rng = Rng::new(seed);
    let w = g.input(rand_tensor(&mut rng, shape[0], shape[1], -1.0, 1.0))?;
    let p = g.mul(x, w)?;
    g.sum(p)
}

/// Keeps inputs away from relu kinks and clamp edges.
fn nudge(v: f64) -> f64 {
    if v.abs() < 0.05 {
        0.1
    } else {
        v
    }
}

fn check<F>(store: &mut ParamStore, ids: &[tf4ctr::diffcore::ParamId], f: F) -> f64
where
    F: Fn(&mut Graph<'_>) -> tf4ctr::Result<NodeId>,
{
    let r = grad_check(store, ids, f, opts()).unwrap();
    assert!(r.passed(), "{:?}", r.params);
    r.max_abs_err()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn binary_ops_match_finite_differences(seed in 0u64..10_000, n in 1usize..5, k in 1usize..5, m in 1usize..4) {
        let mut rng = Rng::new(seed);
        let mut store = ParamStore::new();
        let a = store.add("a", rand_tensor(&mut rng, n, k, -2.0, 2.0));
        let b = store.add("b", rand_tensor(&mut rng, k, m, -2.0, 2.0));
        let c = store.add("c", rand_tensor(&mut rng, n, k, -2.0, 2.0));
        let row = store.add("row", rand_tensor(&mut rng, 1, k, -2.0, 2.0));
        let colv = store.add("col", rand_tensor(&mut rng, n, 1, -2.0, 2.0));
        let ids = [a, b, c, row, colv];
        check(&mut store, &ids, |g| {
            let (pa, pb, pc) = (g.param(a), g.param(b), g.param(c));
            let (pr, pcol) = (g.param(row), g.param(colv));
            let s = g.add(pa, pc)?;
            let s = g.mul(s, pc)?;
            let s = g.add_row(s, pr)?;
            let s = g.mul_col(s, pcol)?;
            let s = g.scale(s, 0.7)?;
            let s = g.matmul(s, pb)?;
            weighted_sum(g, s, seed)
        });
    }

    #[test]
    fn unary_ops_match_finite_differences(seed in 0u64..10_000, n in 1usize..5, k in 1usize..5) {
        let mut rng = Rng::new(seed);
        let mut store = ParamStore::new();
        let x = store.add("x", rand_tensor(&mut rng, n, k, -2.0, 2.0).map(nudge));
        let pos = store.add("pos", rand_tensor(&mut rng, n, k, 0.2, 3.0));
        let ids = [x, pos];
        check(&mut store, &ids, |g| {
            let px = g.param(x);
            let pp = g.param(pos);
            let r = g.relu(px)?;
            let s = g.sigmoid(px)?;
            let sp = g.softplus(px)?;
            let l = g.log(pp)?;
            let pw = g.pow_scalar(pp, 2.5)?;
            let c = g.add_const(pp, 0.3)?;
            let rs = g.rsub_const(4.0, c)?;
            let parts = [r, s, sp, l, pw, rs];
            let cat = g.concat(&parts)?;
            weighted_sum(g, cat, seed + 1)
        });
    }

    #[test]
    fn structural_ops_match_finite_differences(seed in 0u64..10_000, n in 1usize..5, k in 2usize..6) {
        let mut rng = Rng::new(seed);
        let mut store = ParamStore::new();
        let x = store.add("x", rand_tensor(&mut rng, n, k, -3.0, 3.0));
        let table = store.add("table", rand_tensor(&mut rng, 6, 3, -1.0, 1.0));
        let ids_v: Vec<u32> = (0..n).map(|_| rng.below(6) as u32).collect();
        let ids = [x, table];
        check(&mut store, &ids, |g| {
            let px = g.param(x);
            let sm = g.softmax_rows(px)?;
            let sl = g.slice_cols(px, 1, k - 1)?;
            let e = g.gather_rows(table, ids_v.clone())?;
            let a = weighted_sum(g, sm, seed)?;
            let b = weighted_sum(g, sl, seed + 2)?;
            let c = weighted_sum(g, e, seed + 3)?;
            let mean = g.mean(px)?;
            let s = g.add(a, b)?;
            let s = g.add(s, c)?;
            g.add(s, mean)
        });
    }

    #[test]
    fn clamp_passes_gradient_inside_its_range(seed in 0u64..10_000, n in 1usize..6) {
        let mut rng = Rng::new(seed);
        let mut store = ParamStore::new();
        let x = store.add("x", rand_tensor(&mut rng, n, 1, 0.1, 0.9));
        check(&mut store, &[x], |g| {
            let px = g.param(x);
            let c = g.clamp(px, 0.05, 0.95)?;
            let l = g.log(c)?;
            g.sum(l)
        });
    }

    #[test]
    fn softmax_rows_sum_to_one_and_ignore_shifts(
        vals in proptest::collection::vec(-50.0f64..50.0, 1..24),
        shift in -500.0f64..500.0,
    ) {
        let k = 1 + vals.len() % 4;
        let rows = vals.len() / k;
        prop_assume!(rows >= 1);
        let x = Tensor::new(rows, k, vals[..rows * k].to_vec()).unwrap();
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let a = g.input(x.clone()).unwrap();
        let b = g.input(x.map(|v| v + shift)).unwrap();
        let sa = g.softmax_rows(a).unwrap();
        let sb = g.softmax_rows(b).unwrap();
        for r in 0..rows {
            let sum: f64 = g.value(sa).row(r).iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }
        prop_assert!(g.value(sa).max_abs_diff(g.value(sb)) <= 1e-9);
    }

    #[test]
    fn xavier_respects_its_bound(rows in 1usize..60, cols in 1usize..60, seed in 0u64..1000) {
        let mut rng = Rng::new(seed);
        let t = xavier_init(rows, cols, &mut rng);
        let bound = xavier_bound(rows, cols);
        prop_assert!(t.data().iter().all(|v| v.abs() <= bound));
    }
}

#[test]
fn double_backward_accumulation_is_exact() {
    let mut rng = Rng::new(8);
    let mut store = ParamStore::new();
    let w = store.add("w", rand_tensor(&mut rng, 3, 2, -1.0, 1.0));
    let grads = {
        let mut g = Graph::new(&store);
        let x = g.input(rand_tensor(&mut rng, 4, 3, -1.0, 1.0)).unwrap();
        let p = g.param(w);
        let y = g.matmul(x, p).unwrap();
        let y = g.sigmoid(y).unwrap();
        let l = g.mean(y).unwrap();
        g.backward(l).unwrap()
    };
    store.zero_grad();
    store.accumulate(&grads);
    let once = store.grad(w).clone();
    store.accumulate(&grads);
    let twice = store.grad(w);
    for (a, b) in once.data().iter().zip(twice.data()) {
        assert_eq!(2.0 * a, *b);
    }
}

#[test]
fn substreams_give_distinct_xavier_tensors() {
    let root = Rng::new(2023);
    let a = xavier_init(10, 10, &mut root.substream("init"));
    let b = xavier_init(10, 10, &mut root.substream("init"));
    let c = xavier_init(10, 10, &mut root.substream("other"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}
