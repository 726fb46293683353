//! The JSON files under `fixtures/` are generated from the reference
//! builders. Run with `TANGIBLE_BLESS=1` to rewrite them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use tangible_core::fixtures::{
    recalled_positions, study_one_scene, study_one_script, study_two_scene, study_two_script,
};
use tangible_core::scene::{Scene, VirtualObject};
use tangible_core::spatial::{Pose, Vec3};
use tangible_core::study::{run_scenario, run_scenario_observed, FovCondition, TaskScript};
use tangible_sim::script::ScriptDoc;
use tangible_sim::{load_scene, load_script, scene_to_string};

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn check(name: &str, content: &str) {
    let path = dir().join(name);
    if std::env::var_os("TANGIBLE_BLESS").is_some() {
        fs::create_dir_all(dir()).unwrap();
        fs::write(&path, content).unwrap();
        return;
    }
    let on_disk = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(on_disk, content, "{name} is stale; rerun with TANGIBLE_BLESS=1");
}

fn script_json(script: &TaskScript, scene_file: &str) -> String {
    let mut doc = ScriptDoc::from_script(script);
    doc.scene = None;
    doc.scene_file = Some(scene_file.into());
    let mut s = serde_json::to_string_pretty(&doc).unwrap();
    s.push('\n');
    s
}

fn minimal_scene() -> Scene {
    Scene {
        objects: vec![VirtualObject::new(
            "apple",
            "apple",
            Pose::from_translation(Vec3::new(0.0, 0.3, 0.0)),
            0.035,
            true,
        )],
        ..Scene::default()
    }
}

fn study_two_with_recall(fov: FovCondition) -> TaskScript {
    let mut script = study_two_script(fov);
    // recall against where things ended up, a few centimetres off
    let mut last = None;
    let m = run_scenario_observed(&script, |s| last = Some(s.clone())).unwrap();
    assert!(!m.timed_out);
    let end: BTreeMap<String, Vec3> = last.unwrap().objects.into_iter().map(|o| (o.id, o.pose.translation)).collect();
    script.reported = Some(recalled_positions(&end, 0.04));
    script
}

#[test]
fn fixture_files_match_builders() {
    check("scene-minimal.json", &scene_to_string(&minimal_scene()));
    check("study1-scene.json", &scene_to_string(&study_one_scene()));
    check("study2-scene.json", &scene_to_string(&study_two_scene()));
    check("study1.json", &script_json(&study_one_script(), "study1-scene.json"));
    check("study2-narrow.json", &script_json(&study_two_with_recall(FovCondition::Narrow), "study2-scene.json"));
    check("study2-wide.json", &script_json(&study_two_with_recall(FovCondition::Wide), "study2-scene.json"));
}

#[test]
fn fixture_scripts_load_back_to_the_builders() {
    assert_eq!(load_scene(&dir().join("study2-scene.json")).unwrap().objects.len(), 6);
    assert_eq!(load_scene(&dir().join("scene-minimal.json")).unwrap(), minimal_scene());
    let one = load_script(&dir().join("study1.json")).unwrap();
    assert_eq!(one, study_one_script());
    let m = run_scenario(&one).unwrap();
    assert_eq!(m.hints_used, 0);
    assert!(m.completion_times[0].is_some());

    let narrow = run_scenario(&load_script(&dir().join("study2-narrow.json")).unwrap()).unwrap();
    let wide = run_scenario(&load_script(&dir().join("study2-wide.json")).unwrap()).unwrap();
    assert_eq!(narrow.final_hash, wide.final_hash);
    assert!(narrow.completion_times.iter().all(|c| c.is_some()));
    let r = narrow.recall_score.unwrap();
    assert!(r > 0.5 && r < 1.0, "recall {r}");
}
