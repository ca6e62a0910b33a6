use std::time::Instant;

use abr_core::fixtures::{gulf_camera, gulf_scene};
use abr_core::renderer::render_scene;

#[test]
fn gulf_draws_every_layer() {
    let scene = gulf_scene();
    let start = Instant::now();
    let out = render_scene(&scene, &gulf_camera(1024, 1024), scene.seed()).unwrap();
    eprintln!(
        "gulf 1024^2 in {:?}, layer pixels {:?}",
        start.elapsed(),
        out.layer_pixels
    );
    if let Ok(path) = std::env::var("ABR_SAVE_RENDER") {
        out.image.save(path).unwrap();
    }
    assert_eq!(out.layer_pixels.len(), 4);
    assert!(out.layer_pixels.iter().all(|n| *n > 0), "{:?}", out.layer_pixels);
}
