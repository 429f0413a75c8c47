//! Writing and reading images, sinograms, iteration reports and run
//! manifests in a temporary directory.

use dpct::io::{read_image, read_sinogram, run_id, write_image, write_pgm, write_sinogram, RunManifest};
use dpct::projector::{build_projector, ProjectionGeometry};
use dpct::simlab::{make_phantom, PhantomSpec, PhantomVariant};
use serde_json::json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("dpct-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let img = make_phantom(PhantomSpec { variant: PhantomVariant::SheppLoganClassic, size: 32 })?;
    let config = json!({ "size": 32, "variant": "classic" });
    let id = run_id("phantom", &config);
    write_image(&dir.join("ph.img"), &img, Some(&id))?;
    write_pgm(&dir.join("ph.pgm"), &img)?;
    assert_eq!(read_image(&dir.join("ph.img"))?, img);

    let geom = ProjectionGeometry::parallel_beam(32, 32, 16)?;
    let sino = build_projector(geom).project(&img)?;
    write_sinogram(&dir.join("ph.sino"), &sino, 1.0, Some(&id))?;
    let back = read_sinogram(&dir.join("ph.sino"))?;
    assert_eq!(back.sinogram, sino);

    let mut manifest = RunManifest::new("phantom", vec!["file_formats".into()], config, None);
    manifest.record_phase("write", 0.0);
    manifest.write(&dir.join("ph.manifest.json"))?;
    println!("run {id}: files in {}", dir.display());
    for entry in std::fs::read_dir(&dir)? {
        let entry = entry?;
        println!("  {:<20} {:>7} bytes", entry.file_name().to_string_lossy(), entry.metadata()?.len());
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
