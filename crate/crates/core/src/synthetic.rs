//! Seeded generator of collection records shaped like a real museum dump.
//!
//! Titles, person names and accession numbers are unique, so no two records
//! share a canonical key. Attribute coverage roughly follows a medical-history
//! collection: nearly every object has a title, accession number and type;
//! about half have a credit line.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{FieldSet, Record, RelatedRecord, RelationshipRef};

const ADJECTIVES: [&str; 16] = [
    "Brass", "Glass", "Steel", "Oak", "Ivory", "Silver", "Copper", "Leather", "Porcelain", "Walnut", "Bronze",
    "Ebony", "Pewter", "Enamel", "Tin", "Rubber",
];
const NOUNS: [&str; 20] = [
    "Microscope", "Syringe", "Galvanometer", "Stethoscope", "Forceps", "Scalpel", "Retractor", "Specula",
    "Otoscope", "Thermometer", "Inhaler", "Splint", "Lancet", "Pestle", "Mortar", "Tourniquet", "Catheter",
    "Trephine", "Ophthalmoscope", "Sphygmomanometer",
];
const MATERIALS: [&str; 8] = [
    "aluminium and electronic components",
    "brass and glass",
    "steel, wood",
    "silver plated metal",
    "ceramic and cork",
    "leather, cotton and steel",
    "glass",
    "bakelite and copper wire",
];
const FIRST_NAMES: [&str; 12] = [
    "Edith", "Walter", "Margaret", "Harold", "Florence", "Arthur", "Dorothy", "Ernest", "Winifred", "Cecil",
    "Beatrice", "Percival",
];
const SURNAMES: [&str; 12] = [
    "Marlowe", "Whitlock", "Ashby", "Fenwick", "Garrick", "Hollis", "Kingsley", "Lister", "Pemberton", "Radley",
    "Thornbury", "Yardley",
];
const ORG_WORDS: [&str; 6] = ["Walden", "Austral", "Harcourt", "Bayside", "Victoria", "Southern"];
const HISTORY: [&str; 5] = ["anatomy", "surgery", "pharmacy", "physiology", "dentistry"];
const FIELDS_OF_USE: [&str; 5] = ["teaching", "clinical practice", "research", "field hospitals", "dispensing"];
const COLLECTIONS: [&str; 3] = ["Medical History Museum", "Dental Museum", "Pathology Museum"];
const IMAGE_LABELS: [&str; 6] = ["dial", "lens", "handle", "case", "knob", "scale"];

pub fn object_id(i: usize) -> String {
    format!("SYN{i:05}")
}

pub fn object_title(i: usize) -> String {
    format!("{} {} {i}", ADJECTIVES[i % ADJECTIVES.len()], NOUNS[(i / ADJECTIVES.len()) % NOUNS.len()])
}

fn person_name(i: usize) -> String {
    format!("{} {} {i}", FIRST_NAMES[i % FIRST_NAMES.len()], SURNAMES[(i / FIRST_NAMES.len()) % SURNAMES.len()])
}

fn org_name(i: usize) -> String {
    format!("{} Instrument Makers {i}", ORG_WORDS[i % ORG_WORDS.len()])
}

fn field(identifier: &str, value: impl Into<String>) -> FieldSet {
    FieldSet { identifier: identifier.into(), values: vec![value.into()] }
}

fn relationship(id: &str, kind: &str, rid: String, title: String) -> RelationshipRef {
    RelationshipRef {
        relationship_id: id.into(),
        related_record_type: kind.into(),
        related_records: vec![RelatedRecord { related_record_id: rid, title }],
    }
}

/// `objects` records generated from `seed`.
pub fn synthetic_records(objects: usize, seed: u64) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let persons = (objects / 4).max(1);
    let orgs = (objects / 20).max(1);
    let mut next_image = 0usize;
    let mut out = Vec::with_capacity(objects);

    for i in 0..objects {
        let mut fs = vec![field("name", object_title(i))];
        if rng.random_bool(0.86) {
            fs.push(field("material_desc", *MATERIALS.choose(&mut rng).expect("non-empty")));
        }
        if rng.random_bool(0.95) {
            fs.push(field(
                "description",
                format!(
                    "A {} instrument used in {}.",
                    ADJECTIVES.choose(&mut rng).expect("non-empty").to_lowercase(),
                    FIELDS_OF_USE.choose(&mut rng).expect("non-empty")
                ),
            ));
        }
        let year = rng.random_range(1850..1990);
        fs.push(field("accession_no", format!("SYN{year}.{i}")));
        if rng.random_bool(0.83) {
            fs.push(field(
                "measurements",
                format!(
                    "{}.0 x {}.0 x {}.0 cm",
                    rng.random_range(2..60),
                    rng.random_range(2..60),
                    rng.random_range(2..60)
                ),
            ));
        }
        if rng.random_bool(0.49) {
            fs.push(field("credit_line", format!("Gift of {}, {}", person_name(rng.random_range(0..persons)), year + 40)));
        }
        if rng.random_bool(0.82) {
            fs.push(field("production_date", format!("Circa {}", year - rng.random_range(0..30))));
        }
        if rng.random_bool(0.99) {
            fs.push(field("object_type", NOUNS[(i / ADJECTIVES.len()) % NOUNS.len()].to_lowercase()));
        }
        if rng.random_bool(0.66) {
            fs.push(field("history_category", *HISTORY.choose(&mut rng).expect("non-empty")));
        }
        if rng.random_bool(0.3) {
            fs.push(field("acquisition_date", format!("{}", year + 50)));
        }
        if rng.random_bool(0.2) {
            fs.push(field("image_label", *IMAGE_LABELS.choose(&mut rng).expect("non-empty")));
        }
        fs.push(field("collection", *COLLECTIONS.choose(&mut rng).expect("non-empty")));

        let mut rels = Vec::new();
        if rng.random_bool(0.53) {
            let p = rng.random_range(0..persons);
            rels.push(relationship("object_prod_pri_person", "person", format!("P{p}"), person_name(p)));
        } else if rng.random_bool(0.2) {
            let o = rng.random_range(0..orgs);
            rels.push(relationship("object_prod_pri_organisation", "organisation", format!("O{o}"), org_name(o)));
        }
        if rng.random_bool(0.1) {
            let p = rng.random_range(0..persons);
            rels.push(relationship("object_prod_sec_person", "person", format!("P{p}"), person_name(p)));
        }
        if objects > 1 && rng.random_bool(0.19) {
            let mut j = rng.random_range(0..objects - 1);
            if j >= i {
                j += 1;
            }
            rels.push(relationship("object_rel_obj", "object", object_id(j), object_title(j)));
        }
        if objects > 1 && rng.random_bool(0.1) {
            let mut j = rng.random_range(0..objects - 1);
            if j >= i {
                j += 1;
            }
            rels.push(relationship("object_assoc_obj", "object", object_id(j), object_title(j)));
        }

        let images = rng.random_range(0..=5usize);
        let image_ids = (0..images)
            .map(|_| {
                next_image += 1;
                format!("IMG{next_image}")
            })
            .collect();

        out.push(Record { object_id: object_id(i), field_sets: fs, relationships: rels, image_ids });
    }
    out
}
