//! Instance persistence: one JSON document per instance with class-tagged
//! payload sections and exact float round-tripping.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problems::{Payload, ProblemInstance, Sense};
use crate::textio;

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    format: String,
    version: u32,
    id: String,
    dim: usize,
    sense: Sense,
    #[serde(flatten)]
    payload: Payload,
}

const FORMAT: &str = "MEGO-INSTANCE";
const VERSION: u32 = 1;

pub fn save_instance(instance: &ProblemInstance, path: impl AsRef<Path>) -> Result<()> {
    let doc = InstanceFile {
        format: FORMAT.to_string(),
        version: VERSION,
        id: instance.id.clone(),
        dim: instance.dim,
        sense: instance.sense,
        payload: instance.payload().clone(),
    };
    textio::atomic_write(path, textio::to_json_string(&doc)?.as_bytes())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let doc: InstanceFile = textio::from_json_str(&text, &path.display().to_string())?;
    if doc.format != FORMAT || doc.version != VERSION {
        return Err(crate::error::Error::parse(
            path.display().to_string(),
            format!("unsupported format {} v{}", doc.format, doc.version),
        ));
    }
    let mut instance = ProblemInstance::new(doc.id, doc.dim, doc.payload);
    instance.sense = doc.sense;
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitVector;
    use crate::problems::{gen_as, gen_ca_mock, gen_cim, gen_kp, gen_mc, gen_om, CimGraphSource};
    use crate::rng::rng_from_seed;

    #[test]
    fn round_trip_preserves_evaluation_for_every_class() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = rng_from_seed(55);
        let instances = vec![
            gen_om("om", 9, &mut rng),
            gen_kp("kp", 9, &mut rng),
            gen_mc("mc", 9, &mut rng),
            gen_cim("cim", 6, &mut rng, CimGraphSource::Synthetic { nodes: 15, edges: 40 }),
            gen_as("as", 9, &mut rng, 120, 0.08),
            gen_ca_mock("ca", 9, &mut rng),
        ];
        for original in instances {
            let path = dir.path().join(format!("{}.json", original.id));
            save_instance(&original, &path).unwrap();
            let loaded = load_instance(&path).unwrap();
            assert_eq!(loaded.id, original.id);
            assert_eq!(loaded.dim, original.dim);
            assert_eq!(loaded.sense, original.sense);
            let mut a = original.fresh();
            let mut b = loaded.fresh();
            for _ in 0..100 {
                let x = BitVector::random(a.dim, &mut rng);
                assert_eq!(a.evaluate(&x).unwrap(), b.evaluate(&x).unwrap(), "{}", a.id);
            }
        }
    }

    #[test]
    fn unknown_class_tag_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"format":"MEGO-INSTANCE","version":1,"id":"x","dim":3,"sense":"max","class":"NOPE"}"#,
        )
        .unwrap();
        assert!(load_instance(&path).is_err());
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = rng_from_seed(1);
        let inst = gen_om("om", 6, &mut rng);
        let path = dir.path().join("om.json");
        save_instance(&inst, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(load_instance(&path).is_err());
    }
}
