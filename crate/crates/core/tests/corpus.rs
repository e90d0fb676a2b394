//! Checks over the shipped scenario corpus.

use std::collections::BTreeMap;
use std::path::PathBuf;

use scenegen_core::dsl::{compile, parse, pretty, tokenize, CheckedProgram, Item};
use scenegen_core::geom::Vec2;
use scenegen_core::rng::Pcg32;
use scenegen_core::sampler::{eval, sample_scene_traced, EvalEnv, ObjectView, Value};
use scenegen_core::scene::Scene;
use scenegen_core::world::WorldModel;

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus() -> Vec<(PathBuf, String)> {
    let dir = repo_root().join("scenarios");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("scenario corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "scn"))
        .collect();
    files.sort();
    assert!(files.len() >= 3, "corpus should have at least 3 scenarios");
    files
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect()
}

// World references resolve relative to the scenario file's directory.
fn load_world(prog: &CheckedProgram) -> WorldModel {
    let rel = prog.program.world_ref.as_deref().expect("corpus sets a world");
    WorldModel::load(&repo_root().join("scenarios").join(rel)).expect("world loads")
}

#[test]
fn corpus_compiles() {
    for (path, text) in corpus() {
        compile(&text).unwrap_or_else(|e| panic!("{} failed to compile: {e}", path.display()));
    }
}

#[test]
fn corpus_pretty_print_round_trips() {
    for (path, text) in corpus() {
        let first = parse(&tokenize(&text).unwrap()).unwrap();
        let printed = pretty(&first);
        let second = parse(&tokenize(&printed).unwrap())
            .unwrap_or_else(|e| panic!("{} reprint failed to parse: {e}", path.display()));
        assert_eq!(pretty(&second), printed, "{}", path.display());
    }
}

struct SceneEnv<'a> {
    bindings: &'a BTreeMap<String, usize>,
    scene: &'a Scene,
}

impl EvalEnv for SceneEnv<'_> {
    fn lookup(&self, name: &str) -> Option<Value> {
        self.bindings.get(name).map(|&idx| Value::Object(idx as u32 + 1))
    }

    fn object_view(&self, id: u32) -> Option<ObjectView> {
        self.scene.object(id).map(|o| ObjectView {
            pos: Vec2::new(o.x, o.y),
            heading: o.heading,
            speed: 0.0,
        })
    }
}

// Every hard requirement holds on every accepted scene, across many seeds.
#[test]
fn corpus_hard_requirements_hold() {
    for (path, text) in corpus() {
        let prog = compile(&text).unwrap();
        let world = load_world(&prog);
        let hard: Vec<_> = prog
            .program
            .items
            .iter()
            .filter_map(|i| match i {
                Item::Require(r) if r.prob.is_none() => Some(r),
                _ => None,
            })
            .collect();
        let mut total_attempts = 0u32;
        for seed in 0..1000 {
            let result = sample_scene_traced(&prog, &world, seed, 5000)
                .unwrap_or_else(|e| panic!("{} seed {seed}: {e}", path.display()));
            total_attempts += result.attempts;
            let env = SceneEnv {
                bindings: &prog.bindings,
                scene: &result.scene,
            };
            // Requirement expressions in the corpus only reference objects,
            // so they can be re-evaluated against the accepted scene.
            let mut rng = Pcg32::new(0);
            for r in &hard {
                match eval(&r.expr, &env, &mut rng).unwrap() {
                    Value::Bool(true) => {}
                    other => panic!(
                        "{} seed {seed}: hard requirement at {}:{} evaluated to {other:?}",
                        path.display(),
                        r.line,
                        r.col
                    ),
                }
            }
        }
        assert!(
            total_attempts >= 1000,
            "{}: attempts {total_attempts}",
            path.display()
        );
    }
}

// No accepted scene contains an overlapping pair (the corpus never opts out).
#[test]
fn corpus_scenes_never_overlap() {
    use scenegen_core::scene::footprints_overlap;
    for (path, text) in corpus() {
        let prog = compile(&text).unwrap();
        let world = load_world(&prog);
        for seed in 0..200 {
            let scene = scenegen_core::sampler::sample_scene(&prog, &world, seed, 5000).unwrap();
            for i in 0..scene.objects.len() {
                for j in (i + 1)..scene.objects.len() {
                    let (a, b) = (&scene.objects[i], &scene.objects[j]);
                    if a.behavior.is_none() && b.behavior.is_none() {
                        continue;
                    }
                    assert!(
                        !footprints_overlap(a, b),
                        "{} seed {seed}: objects {} and {} overlap",
                        path.display(),
                        a.id,
                        b.id
                    );
                }
            }
        }
    }
}

#[test]
fn corpus_sampling_is_reproducible() {
    for (_, text) in corpus() {
        let prog = compile(&text).unwrap();
        let world = load_world(&prog);
        let a = scenegen_core::sampler::sample_scene(&prog, &world, 99, 5000).unwrap();
        let b = scenegen_core::sampler::sample_scene(&prog, &world, 99, 5000).unwrap();
        assert_eq!(a, b);
    }
}
