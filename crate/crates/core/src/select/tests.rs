use super::*;
use crate::scene::{generate_scene, look_at_camera, Intrinsics, Primitive, SceneSpec};

fn small_scene(seed: u64) -> Scene {
    generate_scene(&SceneSpec {
        n_primitives: 30,
        n_candidates: 12,
        n_eval: 3,
        n_seed: 3,
        rng_seed: seed,
        image_width: 16,
        image_height: 16,
        ..SceneSpec::default()
    })
    .unwrap()
}

fn config() -> SelectConfig {
    SelectConfig {
        grid_patches: 42,
        pixel_stride: 2,
        observation_noise: 0.0,
        ..SelectConfig::default()
    }
}

fn cam(pos: [f64; 3], target: [f64; 3]) -> Camera {
    look_at_camera(pos.into(), target.into(), Vector3::z(), Intrinsics::from_fov(16, 16, 40.0)).unwrap()
}

/// Cluster A around x = -3, cluster B around x = +3. The seed camera sees A
/// from -y; candidate 0 sees A again from nearly the same place, candidate 1
/// sees only B.
fn two_clusters() -> Scene {
    let blob = |x: f64, dy: f64| Primitive::isotropic(Vector3::new(x, dy, 0.0), 0.15, 0.9, Vector3::new(0.5, 0.5, 0.5));
    let prims = vec![blob(-3.0, 0.0), blob(-3.0, 0.3), blob(3.0, 0.0), blob(3.0, 0.3)];
    Scene::new(
        prims,
        vec![cam([0.0, -6.0, 0.5], [0.0, 0.0, 0.0])],
        vec![cam([-3.1, -4.0, 0.0], [-3.0, 0.0, 0.0]), cam([3.0, -4.0, 0.0], [3.0, 0.0, 0.0])],
        vec![cam([-3.0, -4.0, 0.0], [-3.0, 0.0, 0.0])],
    )
    .unwrap()
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
        assert_eq!(Method::from_code(m.code()), Some(m));
    }
    assert!("best".parse::<Method>().is_err());
}

#[test]
fn cover_picks_the_never_seen_cluster() {
    let scene = two_clusters();
    let bench = Workbench::new(&scene, config()).unwrap();
    let mut state = SelectionState::new(&bench, Method::Cover, 1, 0).unwrap();
    let scores = state.score_pool(&bench, Method::Cover).unwrap();
    // B was never observed, so every B primitive scores 0.
    assert_eq!(scores[1].1, 0.0);
    // Candidate 0 re-views A: each A primitive's coverage is
    // (1 + d_c·d)/2 with d_c the grid centre of the seed's viewing direction.
    let seed_pos = scene.seed_cameras[0].position;
    let cand = bench.candidate(0);
    let per_prim: Vec<f64> = scene
        .primitives
        .iter()
        .map(|p| {
            if p.mean.x > 0.0 {
                return 0.0;
            }
            let grid = bench.grid();
            let seen = grid.direction(grid.quantize(&(p.mean - seed_pos).normalize()));
            0.5 * (1.0 + seen.dot(&(p.mean - cand.camera.position).normalize()))
        })
        .collect();
    let hit: Vec<&WeightRow> = cand.rows.rows.iter().filter(|r| !r.is_empty()).collect();
    let expected = hit.iter().map(|r| r.dot(&per_prim)).sum::<f64>() / hit.len() as f64;
    assert!(expected > 0.0);
    assert!((scores[0].1 - expected).abs() < 1e-12, "{scores:?} vs {expected}");
    let sel = select_next(&mut state, &bench).unwrap();
    assert_eq!(sel.camera_id, 1);
    assert_eq!(sel.score, Some(0.0));
}

#[test]
fn pool_of_one_then_exhausted() {
    let scene = two_clusters();
    let bench = Workbench::new(&scene, config()).unwrap();
    let mut state = SelectionState::new(&bench, Method::Trans, 1, 0).unwrap();
    state.pool.remove(&0);
    assert_eq!(select_next(&mut state, &bench).unwrap().camera_id, 1);
    assert!(state.pool.is_empty());
    assert!(matches!(select_next(&mut state, &bench), Err(Error::PoolExhausted)));
}

#[test]
fn random_is_reproducible() {
    let scene = small_scene(1);
    let bench = Workbench::new(&scene, config()).unwrap();
    let (a, _) = run_fixed(&bench, Method::Random, 6, 2, 42).unwrap();
    let (b, _) = run_fixed(&bench, Method::Random, 6, 2, 42).unwrap();
    assert_eq!(a, b);
    let (c, _) = run_fixed(&bench, Method::Random, 6, 2, 43).unwrap();
    assert_ne!(a.chosen(), c.chosen());
}

#[test]
fn zero_rounds_and_too_many_rounds() {
    let scene = small_scene(2);
    let bench = Workbench::new(&scene, config()).unwrap();
    let (curve, state) = run_fixed(&bench, Method::Cover, 0, 3, 0).unwrap();
    assert_eq!(curve.rows.len(), 1);
    assert_eq!(curve.rows[0].camera_id, None);
    assert_eq!(state.training.len(), 3);
    assert!(run_fixed(&bench, Method::Cover, 13, 3, 0).is_err());
    assert!(run_fixed(&bench, Method::Cover, 1, 4, 0).is_err());
}

#[test]
fn selection_conserves_cameras() {
    let scene = small_scene(3);
    let bench = Workbench::new(&scene, config()).unwrap();
    for method in Method::ALL {
        let mut state = SelectionState::new(&bench, method, 2, 5).unwrap();
        let total = state.training.len() + state.pool.len();
        let mut seen = BTreeSet::new();
        for _ in 0..5 {
            let sel = select_next(&mut state, &bench).unwrap();
            assert!(seen.insert(sel.camera_id), "{method} chose {} twice", sel.camera_id);
            assert!(!state.pool.contains(&sel.camera_id));
            assert_eq!(state.training.len() + state.pool.len(), total);
        }
    }
}

#[test]
fn cover_score_saturates_after_absorb() {
    let scene = small_scene(4);
    let bench = Workbench::new(&scene, config()).unwrap();
    let mut state = SelectionState::new(&bench, Method::Cover, 2, 0).unwrap();
    for _ in 0..6 {
        let sel = select_next(&mut state, &bench).unwrap();
        let after = state.score_view(&bench, bench.candidate(sel.camera_id), Method::Cover).unwrap();
        assert!(after >= sel.score.unwrap() - 1e-12);
    }
}

#[test]
fn embodied_with_large_k_matches_fixed() {
    let scene = small_scene(5);
    let bench = Workbench::new(&scene, config()).unwrap();
    let (fixed, _) = run_fixed(&bench, Method::Cover, 5, 2, 0).unwrap();
    let start = default_start(&bench, 2);
    let emb = run_embodied(&bench, Method::Cover, 5, 100, start, 2, 0).unwrap();
    assert_eq!(emb.curve.chosen(), fixed.chosen());
    assert!(!emb.exhausted);
}

#[test]
fn embodied_k1_is_nearest_neighbour_walk() {
    let scene = small_scene(6);
    let bench = Workbench::new(&scene, config()).unwrap();
    let start = default_start(&bench, 2);
    for method in [Method::Cover, Method::Random] {
        let emb = run_embodied(&bench, method, 12, 1, start, 2, 9).unwrap();
        let mut pool: BTreeSet<usize> = (0..12).collect();
        let mut pos = start;
        for id in emb.curve.chosen() {
            let expected = nearest_in_pool(&bench, &pool, &pos, 1)[0];
            assert_eq!(id, expected);
            pool.remove(&id);
            pos = bench.candidate(id).camera.position;
        }
    }
    let emb = run_embodied(&bench, Method::Cover, 20, 5, start, 2, 0).unwrap();
    assert!(emb.exhausted);
    assert_eq!(emb.curve.rows.len(), 13);
    assert!(run_embodied(&bench, Method::Cover, 2, 0, start, 2, 0).is_err());
}

#[test]
fn full_set_beats_seed_set() {
    let scene = small_scene(7);
    let bench = Workbench::new(&scene, config()).unwrap();
    let (curve, _) = run_fixed(&bench, Method::Random, 12, 3, 0).unwrap();
    let first = curve.rows.first().unwrap().eval_mse;
    let last = curve.rows.last().unwrap().eval_mse;
    assert!(last <= first, "{last} > {first}");
}

#[test]
fn workbench_reconstruction_matches_free_function() {
    let scene = small_scene(8);
    let bench = Workbench::new(&scene, config()).unwrap();
    let (_, state) = run_fixed(&bench, Method::View, 3, 2, 0).unwrap();
    let cameras = state.training_cameras(&bench);
    let a = state.reconstruct(&bench).unwrap();
    let b = reconstruct(&scene, &cameras, bench.config().ridge).unwrap();
    assert!((a.eval_mse - b.eval_mse).abs() <= 1e-12 * b.eval_mse.max(1.0));
}

#[test]
fn refined_run_adds_refined_views() {
    let scene = small_scene(9);
    let bench = Workbench::new(&scene, config()).unwrap();
    let out = run(
        &bench,
        &RunOptions {
            method: Method::Cover,
            rounds: 2,
            seed_count: 2,
            rng_seed: 0,
            embodied: None,
            refine: Some(RefineParams {
                steps: 2,
                ..RefineParams::default()
            }),
        },
    )
    .unwrap();
    assert_eq!(out.curve.rows.len(), 3);
    assert_eq!(out.state.training.len(), 4 + out.refined_cameras.len());
}
