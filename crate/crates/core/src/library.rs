//! Built-in node specs and the shape catalog they share.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::flow::{
    type_ref_list_schema, Behavior, ContextHelp, Effect, Effects, HardwareFlags, NodeSpec,
    PortDecl, Registry, Role, SchemaSource, Spectrum,
};
use crate::schema::{SchemaDoc, ValueProfile};
use crate::taint::{Category, Condition, LabelTransfer, PersonalAtom};

/// Sampling period used when a datasource config leaves `period_ms` unset.
pub const DEFAULT_PERIOD_MS: u64 = 1000;

pub const LUX_MAX: f64 = 130_000.0;

/// The configured sampling period of a datasource node.
pub fn period_ms(config: &Value) -> u64 {
    config
        .get("period_ms")
        .and_then(Value::as_u64)
        .unwrap_or(DEFAULT_PERIOD_MS)
}

pub fn shapes() -> BTreeMap<String, SchemaDoc> {
    let num = SchemaDoc::number;
    let entries = [
        (
            "light",
            SchemaDoc::object([("ts", num()), ("lux", SchemaDoc::number_range(0.0, LUX_MAX))]),
        ),
        ("battery", SchemaDoc::number_range(0.0, 1.0)),
        (
            "accelerometer",
            SchemaDoc::object([("x", num()), ("y", num()), ("z", num())]),
        ),
        (
            "bluetooth-scan",
            SchemaDoc::array(SchemaDoc::array_len(SchemaDoc::string(), Some(2), Some(2))),
        ),
        (
            "tweet",
            SchemaDoc::object([
                ("ts", num()),
                ("handle", SchemaDoc::string()),
                ("text", SchemaDoc::string()),
            ]),
        ),
        ("boolean", SchemaDoc::boolean()),
        ("number", num()),
        ("string", SchemaDoc::string()),
        ("chart-series", chart_series()),
    ];
    entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn chart_series() -> SchemaDoc {
    SchemaDoc::object([
        ("t", SchemaDoc::number()),
        (
            "series",
            SchemaDoc::array(SchemaDoc::object([
                ("name", SchemaDoc::string()),
                ("value", SchemaDoc::number()),
            ])),
        ),
    ])
}

fn port(name: &str, schema: SchemaSource) -> PortDecl {
    PortDecl {
        name: name.into(),
        schema,
        labels: None,
    }
}

fn fixed(schema: SchemaDoc) -> SchemaSource {
    SchemaSource::Fixed { schema }
}

fn accepts(key: &str) -> SchemaSource {
    SchemaSource::Accepts { key: key.into() }
}

fn period_schema() -> SchemaDoc {
    SchemaDoc::integer_range(1, 86_400_000)
}

fn base(id: &str, role: Role, behavior: Behavior, description: &str, config: SchemaDoc) -> NodeSpec {
    NodeSpec {
        id: id.into(),
        role,
        description: description.into(),
        behavior,
        config,
        inputs: vec![],
        outputs: vec![],
        risk: Spectrum { lo: 0, hi: 0 },
        hardware: HardwareFlags::default(),
        effects: Effects::default(),
        help: ContextHelp::default(),
        granularity: None,
    }
}

fn light_profiles() -> Vec<ValueProfile> {
    [
        ("moonless overcast night", "Starlight", 0.0, 0.001),
        ("moonless clear night", "Clear night sky with airglow", 0.001, 0.01),
        ("full moon", "Full moon on a clear night", 0.05, 0.36),
        ("civil twilight", "Dark limit of civil twilight under a clear sky", 3.0, 4.0),
        ("dark public area", "Public areas with dark surroundings", 20.0, 50.0),
        ("living room", "Family living room lights", 40.0, 60.0),
        ("office hallway", "Office building hallway or toilet lighting", 70.0, 90.0),
        ("very dark overcast day", "Very dark overcast day", 90.0, 110.0),
        ("office lighting", "Office lighting", 320.0, 500.0),
        ("sunrise or sunset", "Sunrise or sunset on a clear day", 350.0, 450.0),
        ("overcast day", "Overcast day", 800.0, 1200.0),
        ("full daylight", "Full daylight", 10_000.0, 25_000.0),
    ]
    .into_iter()
    .map(|(name, desc, lo, hi)| ValueProfile::numeric(name, desc, ".lux", lo, hi))
    .collect()
}

fn light() -> NodeSpec {
    let mut s = base(
        "light",
        Role::Datasource,
        Behavior::Source,
        "Ambient light level in lux captured by a device camera.",
        SchemaDoc::object_with([("period_ms", period_schema())], Vec::<&str>::new()),
    );
    s.outputs = vec![PortDecl {
        labels: Some(LabelTransfer::emit(vec![])),
        ..port("out", fixed(shapes()["light"].clone()))
    }];
    s.risk = Spectrum { lo: 0, hi: 1 };
    s.granularity = Some(vec![100, 1000, 60_000]);
    s.help = ContextHelp {
        prose: "Emits a timestamp and a lux reading between 0 and 130000. \
                Profiles give typical readings for common lighting conditions."
            .into(),
        profiles: light_profiles(),
    };
    s
}

fn smartphone() -> NodeSpec {
    let sh = shapes();
    let sensors = ["accelerometer", "battery", "bluetooth-scan"];
    let mut s = base(
        "smartphone",
        Role::Datasource,
        Behavior::Source,
        "Phone sensors; the emitted type follows the selected sensor.",
        SchemaDoc::object_with(
            [
                ("sensor", SchemaDoc::string_enum(sensors)),
                ("period_ms", period_schema()),
            ],
            ["sensor"],
        ),
    );
    let cases = sensors
        .iter()
        .map(|k| (k.to_string(), sh[*k].clone()))
        .collect();
    let gait = PersonalAtom::secondary(
        Category::Personal,
        "gait",
        vec![Condition::GranularityAtMost(20)],
    );
    let bluetooth = vec![
        PersonalAtom::primary(Category::Identifier, "mac-address"),
        PersonalAtom::primary(Category::Personal, "proximity"),
        PersonalAtom::secondary(
            Category::Personal,
            "timestamp-series",
            vec![Condition::GranularityAtMost(60_000)],
        ),
        PersonalAtom::secondary(
            Category::Personal,
            "social-graph",
            vec![Condition::RequiresAtom("timestamp-series".into())],
        ),
    ];
    let labels = LabelTransfer::ByConfig {
        key: "sensor".into(),
        cases: BTreeMap::from([
            (
                "accelerometer".to_string(),
                LabelTransfer::emit(vec![PersonalAtom::primary(Category::Personal, "movement"), gait]),
            ),
            ("bluetooth-scan".to_string(), LabelTransfer::emit(bluetooth)),
        ]),
        otherwise: Box::new(LabelTransfer::emit(vec![])),
    };
    s.outputs = vec![PortDecl {
        labels: Some(labels),
        ..port(
            "out",
            SchemaSource::ConfigSelect {
                key: "sensor".into(),
                cases,
                default: sh["battery"].clone(),
            },
        )
    }];
    s.risk = Spectrum { lo: 1, hi: 3 };
    s.granularity = Some(vec![10, 100, 1000, 60_000]);
    s.help.prose = "accelerometer: x, y, z floats; battery: a float in [0, 1]; \
                    bluetooth-scan: pairs of (address, name)."
        .into();
    s
}

fn twitter() -> NodeSpec {
    let mut s = base(
        "twitter",
        Role::Datasource,
        Behavior::Source,
        "Synthetic social media feed of short posts.",
        SchemaDoc::object_with([("period_ms", period_schema())], Vec::<&str>::new()),
    );
    s.outputs = vec![PortDecl {
        labels: Some(LabelTransfer::emit(vec![
            PersonalAtom::primary(Category::Identifier, "handle"),
            PersonalAtom::primary(Category::Personal, "opinions"),
        ])),
        ..port("out", fixed(shapes()["tweet"].clone()))
    }];
    s.risk = Spectrum { lo: 1, hi: 3 };
    s.granularity = Some(vec![1000, 60_000]);
    s
}

fn function() -> NodeSpec {
    let mut s = base(
        "function",
        Role::Processor,
        Behavior::Function,
        "Evaluates an expression over each incoming message.",
        SchemaDoc::object([("body", SchemaDoc::string())]),
    );
    s.inputs = vec![port("in", SchemaSource::Contextual)];
    s.outputs = vec![port("out", SchemaSource::Contextual)];
    s.risk = Spectrum { lo: 0, hi: 2 };
    s
}

fn extract() -> NodeSpec {
    let names: Vec<String> = shapes().into_keys().collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut s = base(
        "extract",
        Role::Processor,
        Behavior::Extract,
        "Keeps selected object fields and may drop personal-data atoms.",
        SchemaDoc::object_with(
            [
                ("accepts", type_ref_list_schema(&names)),
                ("fields", SchemaDoc::array(SchemaDoc::string())),
                ("drop", SchemaDoc::array(SchemaDoc::string())),
            ],
            ["accepts"],
        ),
    );
    s.inputs = vec![port("in", accepts("accepts"))];
    s.outputs = vec![PortDecl {
        labels: Some(LabelTransfer::Filter {
            drop_categories: Default::default(),
            drop_tags: Default::default(),
            config_key: Some("drop".into()),
        }),
        ..port(
            "out",
            SchemaSource::Projection {
                accepts: "accepts".into(),
                keep: "fields".into(),
            },
        )
    }];
    s.risk = Spectrum { lo: 0, hi: 1 };
    s
}

fn trigger() -> NodeSpec {
    let names: Vec<String> = shapes().into_keys().collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut s = base(
        "trigger",
        Role::Processor,
        Behavior::Trigger,
        "Emits true when `field op threshold` starts to hold and false when it stops.",
        SchemaDoc::object_with(
            [
                ("accepts", type_ref_list_schema(&names)),
                ("field", SchemaDoc::string()),
                ("op", SchemaDoc::string_enum(["gt", "ge", "lt", "le"])),
                ("threshold", SchemaDoc::number()),
            ],
            ["accepts", "field", "threshold"],
        ),
    );
    s.inputs = vec![port("in", accepts("accepts"))];
    s.outputs = vec![port("out", fixed(SchemaDoc::boolean()))];
    s.risk = Spectrum { lo: 0, hi: 1 };
    s
}

fn combine() -> NodeSpec {
    let names: Vec<String> = shapes().into_keys().collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut s = base(
        "combine",
        Role::Processor,
        Behavior::Combine,
        "Pairs the latest message on `a` with the latest on `b`.",
        SchemaDoc::object([
            ("a", type_ref_list_schema(&names)),
            ("b", type_ref_list_schema(&names)),
        ]),
    );
    s.inputs = vec![port("a", accepts("a")), port("b", accepts("b"))];
    s.outputs = vec![port(
        "out",
        SchemaSource::Pair {
            a: "a".into(),
            b: "b".into(),
        },
    )];
    s.risk = Spectrum { lo: 0, hi: 1 };
    s
}

fn chart() -> NodeSpec {
    let names: Vec<String> = shapes().into_keys().collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut s = base(
        "chart",
        Role::Processor,
        Behavior::Chart,
        "Turns numeric fields into a plottable series point.",
        SchemaDoc::object([("accepts", type_ref_list_schema(&names))]),
    );
    s.inputs = vec![port("in", accepts("accepts"))];
    s.outputs = vec![port("out", fixed(chart_series()))];
    s.risk = Spectrum { lo: 0, hi: 1 };
    s
}

fn sink(id: &str, description: &str, extra: Option<&str>) -> NodeSpec {
    let names: Vec<String> = shapes().into_keys().collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut props = vec![("accepts", type_ref_list_schema(&names))];
    let mut required = vec!["accepts"];
    if let Some(key) = extra {
        props.push((key, SchemaDoc::string()));
        required.push(key);
    }
    let mut s = base(
        id,
        Role::Output,
        Behavior::Sink,
        description,
        SchemaDoc::object_with(props, required),
    );
    s.inputs = vec![port("in", accepts("accepts"))];
    s
}

fn debug() -> NodeSpec {
    sink("debug", "Shows received messages in the test panel.", None)
}

fn chart_data() -> NodeSpec {
    let mut s = base(
        "chart-data",
        Role::Output,
        Behavior::Sink,
        "Renders series points on a dashboard display.",
        SchemaDoc::empty_object(),
    );
    s.inputs = vec![port("in", fixed(chart_series()))];
    s.risk = Spectrum { lo: 0, hi: 1 };
    s
}

fn export() -> NodeSpec {
    let mut s = sink("export", "Sends messages to a remote endpoint.", Some("destination"));
    s.effects = Effects {
        exports_off_box: Effect::Always,
        physical_actuation: Effect::Never,
    };
    s.risk = Spectrum { lo: 1, hi: 4 };
    s
}

fn actuate() -> NodeSpec {
    let mut s = sink("actuate", "Drives a physical device.", Some("device"));
    s.effects = Effects {
        exports_off_box: Effect::Never,
        physical_actuation: Effect::Always,
    };
    s.risk = Spectrum { lo: 2, hi: 4 };
    s
}

pub fn builtin_nodespecs() -> Vec<NodeSpec> {
    vec![
        light(),
        smartphone(),
        twitter(),
        function(),
        extract(),
        trigger(),
        combine(),
        chart(),
        debug(),
        chart_data(),
        export(),
        actuate(),
    ]
}

/// Registry holding the shape catalog and every built-in spec.
pub fn builtin_specs() -> Registry {
    let mut registry = Registry::new(shapes());
    for spec in builtin_nodespecs() {
        registry
            .register_nodespec(spec)
            .expect("built-in specs are valid");
    }
    registry
}
