//! Synthetic dataset generator in the style of small person-register
//! benchmarks: a pool-driven base population plus a controlled number of
//! duplicated records with random perturbations and ground-truth entity ids.
//!
//! The perturbation law (Poisson-many single-character edits on string
//! fields, probabilistic swaps on categorical fields) is an approximation of
//! such benchmarks' undocumented corruption processes; the rates are exposed
//! so callers can match observed error profiles.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use thiserror::Error;

use crate::model::{Dataset, FieldKind, FieldSpec, IngestError, Schema};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("n_duplicates ({n_duplicates}) must be smaller than n_records ({n_records})")]
    TooManyDuplicates {
        n_duplicates: usize,
        n_records: usize,
    },
    #[error(
        "n_duplicates ({n_duplicates}) exceeds the {n_base} base records available to copy"
    )]
    NotEnoughBases {
        n_duplicates: usize,
        n_base: usize,
    },
    #[error("field '{name}' has an empty value pool")]
    EmptyPool { name: String },
    #[error("no fields declared")]
    NoFields,
    #[error("error rates leave duplicates impossible to perturb")]
    CannotPerturb,
    #[error("string_error must be nonnegative and cat_error within [0, 1]")]
    BadRates,
    #[error("duplicate of record {index} could not be made distinct after {attempts} attempts")]
    PerturbationStuck { index: usize, attempts: usize },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// One generated field: its model kind and the pool base values are drawn
/// from.
#[derive(Debug, Clone)]
pub struct GenField {
    pub name: String,
    pub kind: FieldKind,
    pub pool: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub n_records: usize,
    pub n_duplicates: usize,
    pub fields: Vec<GenField>,
    /// Expected number of random single-character edits per duplicated
    /// string field (Poisson mean).
    pub string_error: f64,
    /// Probability that a duplicated categorical field is swapped for a
    /// different pool value.
    pub cat_error: f64,
    pub seed: u64,
}

impl GenConfig {
    /// A five-field person register: two string-valued name fields and a
    /// categorical birth date, the shape of the classic 500-record
    /// de-duplication benchmark.
    pub fn person_register(
        n_records: usize,
        n_duplicates: usize,
        string_error: f64,
        cat_error: f64,
        seed: u64,
    ) -> GenConfig {
        GenConfig {
            n_records,
            n_duplicates,
            fields: default_person_fields(),
            string_error,
            cat_error,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.fields.is_empty() {
            return Err(GenError::NoFields);
        }
        for field in &self.fields {
            if field.pool.is_empty() {
                return Err(GenError::EmptyPool {
                    name: field.name.clone(),
                });
            }
        }
        if self.n_duplicates >= self.n_records {
            return Err(GenError::TooManyDuplicates {
                n_duplicates: self.n_duplicates,
                n_records: self.n_records,
            });
        }
        let n_base = self.n_records - self.n_duplicates;
        if self.n_duplicates > n_base {
            return Err(GenError::NotEnoughBases {
                n_duplicates: self.n_duplicates,
                n_base,
            });
        }
        if self.string_error < 0.0 || !(0.0..=1.0).contains(&self.cat_error) {
            return Err(GenError::BadRates);
        }
        if self.n_duplicates > 0 {
            let can_edit_string = self.string_error > 0.0
                && self
                    .fields
                    .iter()
                    .any(|f| matches!(f.kind, FieldKind::String));
            let can_swap_cat = self.cat_error > 0.0
                && self
                    .fields
                    .iter()
                    .any(|f| matches!(f.kind, FieldKind::Categorical) && f.pool.len() > 1);
            if !can_edit_string && !can_swap_cat {
                return Err(GenError::CannotPerturb);
            }
        }
        Ok(())
    }
}

/// Raw generated table: header, rows, and the schema that interprets them.
/// Rows are `[list, truth id, fields...]`, deterministic per seed.
pub struct SyntheticTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub schema: Schema,
}

impl SyntheticTable {
    pub fn intern(&self) -> Result<Dataset, IngestError> {
        Dataset::intern(&self.rows, &self.schema)
    }
}

/// Generate the raw table: base records drawn from the pools, a sample of
/// them duplicated and perturbed until each copy differs from its source in
/// at least one field, everything shuffled, truth ids attached.
pub fn generate_table(config: &GenConfig) -> Result<SyntheticTable, GenError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_base = config.n_records - config.n_duplicates;
    let alphabets: Vec<Vec<char>> = config
        .fields
        .iter()
        .map(|f| {
            let mut chars: Vec<char> = f
                .pool
                .iter()
                .flat_map(|w| w.chars())
                .collect::<std::collections::BTreeSet<char>>()
                .into_iter()
                .collect();
            if chars.is_empty() {
                chars.push('a');
            }
            chars
        })
        .collect();

    let base: Vec<Vec<String>> = (0..n_base)
        .map(|_| {
            config
                .fields
                .iter()
                .map(|f| f.pool[rng.gen_range(0..f.pool.len())].clone())
                .collect()
        })
        .collect();

    // Choose distinct source records for the duplicates.
    let mut source_ids: Vec<usize> = (0..n_base).collect();
    source_ids.shuffle(&mut rng);
    source_ids.truncate(config.n_duplicates);

    // (entity id, field values)
    let mut entries: Vec<(usize, Vec<String>)> =
        base.iter().cloned().enumerate().collect();
    for &src in &source_ids {
        let copy = perturb(&base[src], config, &alphabets, &mut rng)
            .map_err(|attempts| GenError::PerturbationStuck {
                index: src,
                attempts,
            })?;
        entries.push((src, copy));
    }
    entries.shuffle(&mut rng);

    let mut header = vec!["list".to_string(), "id".to_string()];
    header.extend(config.fields.iter().map(|f| f.name.clone()));
    let rows: Vec<Vec<String>> = entries
        .into_iter()
        .map(|(ent, values)| {
            let mut row = vec!["1".to_string(), format!("e{ent}")];
            row.extend(values);
            row
        })
        .collect();
    let fields = config
        .fields
        .iter()
        .enumerate()
        .map(|(f, gf)| FieldSpec {
            name: gf.name.clone(),
            kind: gf.kind,
            column: f + 2,
        })
        .collect();
    let schema = Schema::new(fields, 0, Some(1))?;
    Ok(SyntheticTable {
        header,
        rows,
        schema,
    })
}

/// Generate and intern in one step.
pub fn generate_synthetic(config: &GenConfig) -> Result<Dataset, GenError> {
    Ok(generate_table(config)?.intern()?)
}

fn perturb(
    source: &[String],
    config: &GenConfig,
    alphabets: &[Vec<char>],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<String>, usize> {
    const MAX_ATTEMPTS: usize = 100;
    for _ in 0..MAX_ATTEMPTS {
        let mut copy: Vec<String> = Vec::with_capacity(source.len());
        for (f, field) in config.fields.iter().enumerate() {
            let value = match field.kind {
                FieldKind::String => {
                    let mut chars: Vec<char> = source[f].chars().collect();
                    if config.string_error > 0.0 {
                        let edits = rand_distr::Poisson::new(config.string_error)
                            .expect("positive Poisson mean")
                            .sample(rng) as usize;
                        for _ in 0..edits {
                            apply_edit(&mut chars, &alphabets[f], rng);
                        }
                    }
                    chars.into_iter().collect()
                }
                FieldKind::Categorical => {
                    if field.pool.len() > 1 && rng.gen::<f64>() < config.cat_error {
                        // Swap for a different pool value.
                        let mut pick = rng.gen_range(0..field.pool.len() - 1);
                        if field.pool[pick] == source[f] {
                            pick = field.pool.len() - 1;
                        }
                        field.pool[pick].clone()
                    } else {
                        source[f].clone()
                    }
                }
            };
            copy.push(value);
        }
        if copy.iter().zip(source).any(|(a, b)| a != b) && copy.iter().all(|v| !v.is_empty()) {
            return Ok(copy);
        }
    }
    Err(MAX_ATTEMPTS)
}

fn apply_edit(chars: &mut Vec<char>, alphabet: &[char], rng: &mut ChaCha8Rng) {
    let op = if chars.is_empty() {
        0 // only insertion is possible
    } else {
        rng.gen_range(0..3)
    };
    match op {
        0 => {
            let pos = rng.gen_range(0..=chars.len());
            chars.insert(pos, alphabet[rng.gen_range(0..alphabet.len())]);
        }
        1 => {
            let pos = rng.gen_range(0..chars.len());
            chars.remove(pos);
        }
        _ => {
            let pos = rng.gen_range(0..chars.len());
            let mut c = alphabet[rng.gen_range(0..alphabet.len())];
            if c == chars[pos] {
                // Pick the next alphabet character so the edit is real.
                let idx = alphabet.iter().position(|&a| a == c).unwrap();
                c = alphabet[(idx + 1) % alphabet.len()];
            }
            if c != chars[pos] {
                chars[pos] = c;
            }
        }
    }
}

fn default_person_fields() -> Vec<GenField> {
    let fname: Vec<String> = [
        "GERD", "HANS", "PETER", "KLAUS", "WERNER", "KARL", "HEINZ", "HELMUT", "WALTER", "FRANK",
        "HORST", "JUERGEN", "MANFRED", "UWE", "WOLFGANG", "GUENTER", "STEFAN", "RENATE",
        "MONIKA", "URSULA", "SABINE", "HELGA", "INGRID", "ERIKA", "ELKE", "GISELA", "ANNA",
        "MARIA", "BRIGITTE", "ANDREA", "GABRIELE", "HILDEGARD", "CHRISTA", "BARBARA", "SUSANNE",
        "MICHAEL", "THOMAS", "MATTHIAS", "MARKUS", "OLIVER", "ALEXANDER", "ROBERT", "CLAUDIA",
        "BIRGIT", "KATRIN", "NICOLE", "KERSTIN", "ANTJE", "DORIS", "EDITH", "ELFRIEDE", "FRIEDA",
        "GERTRUD", "HANNELORE", "IRMGARD", "KAETHE", "LIESELOTTE", "MARGARETE", "PAULA",
        "ROSEMARIE", "WALTRAUD", "OTTO", "RICHARD", "ROLF", "SIEGFRIED", "WILHELM", "WILLI",
        "ERNST", "FRIEDRICH", "FRITZ", "GERHARD", "GUSTAV", "HARALD", "HEINRICH", "HERBERT",
        "HERMANN", "JOSEF", "ARMIN", "AXEL", "BRUNO", "CARSTEN", "DETLEF", "DIRK", "EGON",
        "EMIL", "FALKO", "FELIX", "FLORIAN", "GEORGE", "HARTMUT", "HOLGER", "INGO", "JOCHEN",
        "JOERG", "LOTHAR", "LUDWIG", "RAINER", "ROLAND", "RUEDIGER", "SVEN", "ULRICH",
        "WILFRIED", "ACHIM", "ARTHUR", "BALDUR", "BERTHOLD", "BURKHARD", "CHRISTOPH", "CLEMENS",
        "CONRAD", "DANIEL", "DAVID", "DENNIS", "DOMINIK", "EDGAR", "EKKEHARD", "EWALD", "FABIAN",
        "FERDINAND", "GOTTFRIED", "GREGOR", "GUIDO", "GUNNAR", "HENDRIK", "HENNING", "IGNAZ",
        "IMMANUEL", "JAKOB", "JOHANN", "JONAS", "JULIUS", "KASPAR", "KONSTANTIN", "LEONHARD",
        "LORENZ", "LUKAS", "MARCEL", "MAXIMILIAN", "NIKOLAUS", "OSKAR", "PHILIPP", "RAFAEL",
        "RAIMUND", "REINHOLD", "SEBASTIAN", "SIEGMUND", "SIMON", "THEODOR", "TOBIAS", "VALENTIN",
        "VIKTOR", "VINZENZ", "ADELHEID", "AGNES", "ANGELIKA", "ANNELIESE", "ANNETTE", "ASTRID",
        "BETTINA", "CAROLA", "CORNELIA", "DAGMAR", "DOROTHEA", "ELISABETH", "EVA", "FRANZISKA",
        "FRIEDERIKE", "GERLINDE", "GRETEL", "GUDRUN", "HENRIETTE", "IRENE", "JUTTA", "LUISE",
        "MAGDALENA", "MARGOT", "MARLENE", "MATHILDE", "MECHTHILD", "MELANIE", "FRIEDHELM",
        "GOTTLIEB", "HILMAR", "ADALBERT", "ALOIS", "AMBROS", "ANSGAR", "ARNULF", "BALTHASAR",
        "BARNABAS", "BENEDIKT", "BERTRAM", "BONIFAZ", "DAGOBERT", "DIETHELM", "DIETMAR",
        "EBERWIN", "ECKART", "EHRENFRIED", "ELIAS", "ENGELBERT", "ERASMUS", "FLORENTIN",
        "FRIDOLIN", "GANGOLF", "GISBERT", "GOTTHARD", "GREGORIUS", "HADUBRAND", "HARTWIG",
        "HILDEBRAND", "HUBERTUS", "INNOZENZ", "ISIDOR", "KILIAN", "KORBINIAN", "LAMBERT",
        "LEOPOLD", "LIBORIUS", "LUITPOLD", "MEINRAD", "NEPOMUK", "NIKODEMUS", "NOTKER", "ORTWIN",
        "PANKRAZ", "PASCHALIS", "POLYKARP", "QUIRIN", "REMIGIUS", "ROCHUS", "RODERICH",
        "RUPRECHT", "SERVAZ", "SEVERIN", "SIGISMUND", "SILVESTER", "THADDAEUS", "TRAUGOTT",
        "URBAN", "VEIT", "VOLKMAR", "WENDELIN", "WILLIBALD", "WUNIBALD", "ZACHARIAS",
        "ADELGUNDE", "ALBERTINE", "ALWINE", "AMALIE", "APOLLONIA", "AUGUSTE", "BALBINA",
        "BERNADETTE", "BLANDINA", "BRUNHILDE", "BURGEL", "CAECILIA", "CHRISTIANE", "CLARISSA",
        "CRESZENZ", "DIETLINDE", "EDELTRAUD", "ELEONORE", "ELVIRA", "ERMENTRUD", "ERNESTINE",
        "EULALIA", "FELIZITAS", "GENOVEVA", "HEILWIG", "HERMELINDE", "HILTRUD", "HONORATA",
        "IDUNA", "IRMELA", "JOSEPHINE", "KUNIGUNDE", "LAURENTIA", "LEOKADIA", "LUDMILLA",
        "LUITGARD", "MARIANNE", "NATHALIE", "NOTBURGA", "ODILIA", "OTTILIE", "PHILIPPINE",
        "REGINTRUD", "ROSWITHA", "RUTHILD", "SALOMEA", "SERAPHINE", "SIGRUN", "SWANHILD",
        "THEKLA", "THERESIA", "TRAUDEL", "VERENA", "WALBURGA", "WIBKE", "WILHELMINE",
        "WOLFHILDE", "ZITA", "ANNEGRET", "ANNEROSE",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let lname: Vec<String> = [
        "MUELLER", "SCHMIDT", "SCHNEIDER", "FISCHER", "WEBER", "WAGNER", "BECKER", "SCHULZ",
        "HOFFMANN", "SCHAEFER", "KOCH", "BAUER", "RICHTER", "KLEIN", "WOLF", "SCHROEDER",
        "NEUMANN", "SCHWARZ", "ZIMMERMANN", "BRAUN", "KRUEGER", "HARTMANN", "LANGE", "KRAUSE",
        "KOEHLER", "KOENIG", "KAISER", "FUCHS", "PETERS", "WEISS", "JUNG", "HAHN", "SCHUBERT",
        "VOGEL", "FRIEDRICH", "GUENTHER", "FRANK", "WINKLER", "LORENZ", "ALBRECHT", "SCHUSTER",
        "SIMON", "LUDWIG", "BOEHM", "KRAFT", "SCHUMACHER", "SOMMER", "HEINRICH", "SEIDEL",
        "HEINZE", "BRANDT", "HAASE", "DIETRICH", "ZIEGLER", "POHL", "BUSCH", "BERGMANN",
        "THOMAS", "VOIGT", "ARNOLD", "PFEIFFER", "OTTO", "JAEGER", "GROSS", "BRINKMANN",
        "REUTER", "SEIFERT", "BOETTCHER", "GRUBER", "SCHINDLER", "KRAMER", "HELLWIG", "RIEDEL",
        "MARX", "ADAM", "KRETSCHMER", "URBAN", "SCHENK", "DIETZ", "BBERGER", "HHEYER",
        "HHORNUNG", "ACKERMANN", "APPEL", "BARTELS", "BARTH", "BEHRENS", "BERG", "BERNHARDT",
        "BINDER", "BISCHOFF", "BLUM", "BODE", "BRUNNER", "BUCHHOLZ", "CONRAD", "DANIEL", "DOERR",
        "DREWS", "EHLERS", "EICHHORN", "ENGELHARDT", "ERNST", "ESSER", "FISCHBACH", "FORSTER",
        "FREITAG", "FRENZEL", "FREY", "FROMM", "GEBHARDT", "GEIGER", "GERLACH", "GIESE",
        "GLASER", "GOEBEL", "HABERMANN", "HAGEDORN", "HARMS", "HAUPT", "HEILMANN", "HELD",
        "HENNIG", "HENSEL", "HILDEBRANDT", "HILLER", "HOELSCHER", "HOPPE", "HUBNER", "JACOB",
        "JANSEN", "KANIA", "KIRCHNER", "KIRSCH", "KLOSE", "KNOP", "KROLL", "KUGLER", "KUNERT",
        "KUNTZ", "LINDENBERGER", "LINDENFELDER", "LINDENBACHER", "LINDENHOFER", "LINDENTHALER",
        "LINDENGRUBER", "LINDENHAUSEN", "LINDENKAMP", "LINDENBROOK", "LINDENSTETTER",
        "ROSENBERGER", "ROSENFELDER", "ROSENBACHER", "ROSENHOFER", "ROSENTHALER", "ROSENGRUBER",
        "ROSENHAUSEN", "ROSENKAMP", "ROSENBROOK", "ROSENSTETTER", "EICHENBERGER", "EICHENFELDER",
        "EICHENBACHER", "EICHENHOFER", "EICHENTHALER", "EICHENGRUBER", "EICHENHAUSEN",
        "EICHENKAMP", "EICHENBROOK", "EICHENSTETTER", "BIRKENBERGER", "BIRKENFELDER",
        "BIRKENBACHER", "BIRKENHOFER", "BIRKENTHALER", "BIRKENGRUBER", "BIRKENHAUSEN",
        "BIRKENKAMP", "BIRKENBROOK", "BIRKENSTETTER", "TANNENBERGER", "TANNENFELDER",
        "TANNENBACHER", "TANNENHOFER", "TANNENTHALER", "TANNENGRUBER", "TANNENHAUSEN",
        "TANNENKAMP", "TANNENBROOK", "TANNENSTETTER", "HASELBERGER", "HASELFELDER",
        "HASELBACHER", "HASELHOFER", "HASELTHALER", "HASELGRUBER", "HASELHAUSEN", "HASELKAMP",
        "HASELBROOK", "HASELSTETTER", "ULMENBERGER", "ULMENFELDER", "ULMENBACHER", "ULMENHOFER",
        "ULMENTHALER", "ULMENGRUBER", "ULMENHAUSEN", "ULMENKAMP", "ULMENBROOK", "ULMENSTETTER",
        "AHORNBERGER", "AHORNFELDER", "AHORNBACHER", "AHORNHOFER", "AHORNTHALER", "AHORNGRUBER",
        "AHORNHAUSEN", "AHORNKAMP", "AHORNBROOK", "AHORNSTETTER", "STEINBERGER", "STEINFELDER",
        "STEINBACHER", "STEINHOFER", "STEINTHALER", "STEINGRUBER", "STEINHAUSEN", "STEINKAMP",
        "STEINBROOK", "STEINSTETTER", "BERGBERGER", "BERGFELDER", "BERGBACHER", "BERGHOFER",
        "BERGTHALER", "BERGGRUBER", "BERGHAUSEN", "BERGKAMP", "BERGBROOK", "BERGSTETTER",
        "WALDBERGER", "WALDFELDER", "WALDBACHER", "WALDHOFER", "WALDTHALER", "WALDGRUBER",
        "WALDHAUSEN", "WALDKAMP", "WALDBROOK", "WALDSTETTER", "BACHBERGER", "BACHFELDER",
        "BACHBACHER", "BACHHOFER", "BACHTHALER", "BACHGRUBER", "BACHHAUSEN", "BACHKAMP",
        "BACHBROOK", "BACHSTETTER", "GRUNDBERGER", "GRUNDFELDER", "GRUNDBACHER", "GRUNDHOFER",
        "GRUNDTHALER", "GRUNDGRUBER", "GRUNDHAUSEN", "GRUNDKAMP", "GRUNDBROOK", "GRUNDSTETTER",
        "HOFBERGER", "HOFFELDER", "HOFBACHER", "HOFHOFER", "HOFTHALER", "HOFGRUBER", "HOFHAUSEN",
        "HOFKAMP", "HOFBROOK", "HOFSTETTER", "BRUCKBERGER", "BRUCKFELDER", "BRUCKBACHER",
        "BRUCKHOFER", "BRUCKTHALER", "BRUCKGRUBER", "BRUCKHAUSEN", "BRUCKKAMP", "BRUCKBROOK",
        "BRUCKSTETTER", "THALBERGER", "THALFELDER", "THALBACHER", "THALHOFER", "THALTHALER",
        "THALGRUBER", "THALHAUSEN", "THALKAMP", "THALBROOK", "THALSTETTER", "WIESENBERGER",
        "WIESENFELDER", "WIESENBACHER", "WIESENHOFER", "WIESENTHALER", "WIESENGRUBER",
        "WIESENHAUSEN", "WIESENKAMP", "WIESENBROOK", "WIESENSTETTER", "MORGENBERGER",
        "MORGENFELDER", "MORGENBACHER", "MORGENHOFER", "MORGENTHALER", "MORGENGRUBER",
        "MORGENHAUSEN", "MORGENKAMP", "MORGENBROOK", "MORGENSTETTER", "ABENDBERGER",
        "ABENDFELDER", "ABENDBACHER", "ABENDHOFER", "ABENDTHALER", "ABENDGRUBER", "ABENDHAUSEN",
        "ABENDKAMP", "ABENDBROOK", "ABENDSTETTER", "WINTERBERGER", "WINTERFELDER",
        "WINTERBACHER", "WINTERHOFER", "WINTERTHALER", "WINTERGRUBER", "WINTERHAUSEN",
        "WINTERKAMP", "WINTERBROOK", "WINTERSTETTER", "SOMMERBERGER", "SOMMERFELDER",
        "SOMMERBACHER", "SOMMERHOFER", "SOMMERTHALER", "SOMMERGRUBER", "SOMMERHAUSEN",
        "SOMMERKAMP", "SOMMERBROOK", "SOMMERSTETTER", "HERBSTBERGER", "HERBSTFELDER",
        "HERBSTBACHER", "HERBSTHOFER", "HERBSTTHALER", "HERBSTGRUBER", "HERBSTHAUSEN",
        "HERBSTKAMP", "HERBSTBROOK", "HERBSTSTETTER", "NORDBERGER", "NORDFELDER", "NORDBACHER",
        "NORDHOFER", "NORDTHALER", "NORDGRUBER", "NORDHAUSEN", "NORDKAMP", "NORDBROOK",
        "NORDSTETTER", "SUEDBERGER", "SUEDFELDER", "SUEDBACHER", "SUEDHOFER", "SUEDTHALER",
        "SUEDGRUBER", "SUEDHAUSEN", "SUEDKAMP", "SUEDBROOK", "SUEDSTETTER", "OSTERBERGER",
        "OSTERFELDER", "OSTERBACHER", "OSTERHOFER", "OSTERTHALER", "OSTERGRUBER", "OSTERHAUSEN",
        "OSTERKAMP", "OSTERBROOK", "OSTERSTETTER",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let by: Vec<String> = (1900..2000).map(|y| y.to_string()).collect();
    let bm: Vec<String> = (1..=12).map(|m| m.to_string()).collect();
    let bd: Vec<String> = (1..=31).map(|d| d.to_string()).collect();
    vec![
        GenField {
            name: "fname".into(),
            kind: FieldKind::String,
            pool: fname,
        },
        GenField {
            name: "lname".into(),
            kind: FieldKind::String,
            pool: lname,
        },
        GenField {
            name: "by".into(),
            kind: FieldKind::Categorical,
            pool: by,
        },
        GenField {
            name: "bm".into(),
            kind: FieldKind::Categorical,
            pool: bm,
        },
        GenField {
            name: "bd".into(),
            kind: FieldKind::Categorical,
            pool: bd,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::LinkagePartition;
    use crate::strdist::edit_distance;

    #[test]
    fn entity_count_and_shape() {
        let config = GenConfig::person_register(500, 50, 1.0, 0.05, 11);
        let dataset = generate_synthetic(&config).unwrap();
        assert_eq!(dataset.n_records(), 500);
        assert_eq!(dataset.n_fields(), 5);
        assert_eq!(dataset.schema.p_s(), 2);
        let truth = dataset.truth.as_ref().unwrap();
        let distinct: std::collections::HashSet<u32> = truth.iter().copied().collect();
        assert_eq!(distinct.len(), 450);
        // Truth forms a valid partition with exactly 50 linked pairs.
        let partition = LinkagePartition::from_labels(truth);
        assert_eq!(partition.linked_pairs(), 50);
    }

    #[test]
    fn name_frequencies_are_dilute() {
        // With every duplicate perturbed, name values are mostly unique or
        // near-unique, so the empirical weights sit near 1/N.
        let config = GenConfig::person_register(500, 50, 1.0, 0.05, 11);
        let dataset = generate_synthetic(&config).unwrap();
        for f in 0..dataset.schema.p_s() {
            let dist = crate::model::EmpiricalDist::build(&dataset, f);
            let dilute = dist.probs.iter().filter(|&&p| p <= 5.0 / 500.0).count();
            assert!(
                dilute as f64 >= 0.9 * dist.probs.len() as f64,
                "field {f}: only {dilute}/{} values near 1/500",
                dist.probs.len()
            );
        }
    }

    #[test]
    fn exact_matching_finds_nothing_on_perturbed_duplicates() {
        // Every duplicate differs from its source somewhere, so exact
        // matching links nothing: FNR 1 and, by convention, FDR 0.
        let config = GenConfig::person_register(500, 50, 1.0, 0.05, 11);
        let dataset = generate_synthetic(&config).unwrap();
        let estimate = crate::eval::exact_match_baseline(&dataset);
        let truth = LinkagePartition::from_labels(dataset.truth.as_ref().unwrap());
        let counts = crate::eval::confusion_counts(&estimate, &truth).unwrap();
        assert_eq!(crate::eval::fnr(&counts), 1.0);
        assert_eq!(crate::eval::fdr(&counts), 0.0);
        assert_eq!(counts.correct_links, 0);
    }

    #[test]
    fn deterministic_per_seed() {
        let config = GenConfig::person_register(120, 20, 1.0, 0.1, 7);
        let t1 = generate_table(&config).unwrap();
        let t2 = generate_table(&config).unwrap();
        assert_eq!(t1.rows, t2.rows);
        let other = GenConfig {
            seed: 8,
            ..config.clone()
        };
        let t3 = generate_table(&other).unwrap();
        assert_ne!(t1.rows, t3.rows);
    }

    #[test]
    fn duplicates_differ_from_sources() {
        let config = GenConfig::person_register(300, 60, 0.8, 0.05, 3);
        let dataset = generate_synthetic(&config).unwrap();
        let truth = dataset.truth.as_ref().unwrap();
        let mut by_entity: std::collections::HashMap<u32, Vec<usize>> = Default::default();
        for (r, &e) in truth.iter().enumerate() {
            by_entity.entry(e).or_default().push(r);
        }
        let mut pairs = 0;
        for members in by_entity.values() {
            if members.len() == 2 {
                pairs += 1;
                let differs = (0..dataset.n_fields())
                    .any(|f| dataset.value(members[0], f) != dataset.value(members[1], f));
                assert!(differs, "duplicate identical to its source");
            }
        }
        assert_eq!(pairs, 60);
    }

    #[test]
    fn mean_edit_distance_tracks_string_error() {
        // With a Poisson(1.0) edit count, the average edit distance between a
        // duplicated string field and its source is close to 1 (slightly
        // below, since edits can partially cancel).
        let config = GenConfig::person_register(20_000, 10_000, 1.0, 0.05, 1234);
        let dataset = generate_synthetic(&config).unwrap();
        let truth = dataset.truth.as_ref().unwrap();
        let mut by_entity: std::collections::HashMap<u32, Vec<usize>> = Default::default();
        for (r, &e) in truth.iter().enumerate() {
            by_entity.entry(e).or_default().push(r);
        }
        let mut total = 0.0;
        let mut count = 0.0;
        for members in by_entity.values() {
            if members.len() == 2 {
                for f in 0..dataset.schema.p_s() {
                    let a = dataset.value_str(members[0], f);
                    let b = dataset.value_str(members[1], f);
                    total += edit_distance(a, b) as f64;
                    count += 1.0;
                }
            }
        }
        let mean = total / count;
        assert!(
            (mean - 1.0).abs() < 0.15,
            "mean edit distance {mean} too far from the Poisson mean"
        );
    }

    #[test]
    fn impossible_perturbation_rejected() {
        let mut config = GenConfig::person_register(10, 2, 0.0, 0.0, 1);
        assert!(matches!(
            generate_synthetic(&config),
            Err(GenError::CannotPerturb)
        ));
        config.n_duplicates = 0;
        assert!(generate_synthetic(&config).is_ok());
    }

    #[test]
    fn bad_shapes_rejected() {
        let config = GenConfig::person_register(10, 10, 1.0, 0.0, 1);
        assert!(matches!(
            generate_synthetic(&config),
            Err(GenError::TooManyDuplicates { .. })
        ));
        let config = GenConfig::person_register(10, 6, 1.0, 0.0, 1);
        assert!(matches!(
            generate_synthetic(&config),
            Err(GenError::NotEnoughBases { .. })
        ));
        let mut config = GenConfig::person_register(10, 2, 1.0, 0.0, 1);
        config.fields[0].pool.clear();
        assert!(matches!(
            generate_synthetic(&config),
            Err(GenError::EmptyPool { .. })
        ));
    }
}
