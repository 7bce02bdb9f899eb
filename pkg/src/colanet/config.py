"""Network configuration dialect: parse, validate, serialize, generate, build.

The dialect is a small XML subset (elements, attributes, text content; no
namespaces, entities, or CDATA) and is parsed by hand so error messages and
round-tripping stay under full control. Unknown elements are preserved as
opaque nodes, so documents survive parse -> serialize -> parse untouched.

The packaged ``reference.nnc`` is the golden network description: two
receptor arrays (784 pixel inputs, 10 class inputs), five sections, and
eleven links wiring the plastic layer, the winner-take-all circuit, the
reward gate, the output layer, and the supervision bias path.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from typing import Optional

from colanet.errors import ConfigError
from colanet.plasticity import PlasticityParams
from colanet.snn_core import LinkSpec, Network, SectionSpec
from colanet.spike_encoding import EncodingParams

# Scale between search-space weight units (threshold-normalized, optimum
# w_max 0.1) and the document dialect's weight units (maxweight 0.864249).
# Equivalently: the firing threshold expressed in document units. The
# engine works threshold-normalized, so building a network divides every
# weight-dimensioned document scalar by this constant. One relation changes
# side under the division: the class-bias kick into the learning layer
# (document weight 3 -> 0.347) is sub-threshold, so supervision primes the
# class column during the silent half-window and fires, first, the neuron
# the image itself charged the most; its winner-take-all chain then vetoes
# the kick source before the unprimed rest of the column can reach
# threshold. Run with unscaled weights the kick is supra-threshold, the
# whole column fires and depresses on every labelled image, and learning
# collapses (weights sink to the floor and test accuracy decays toward
# chance as training lengthens).
UNIT_SCALE = 0.864249 / 0.1
# Initial synaptic resource relative to the weight ceiling: plastic weights
# start saturated with this much headroom above the clamp.
INI_RESOURCE_RATIO = 1.267 / 0.864249

HYPERPARAMETER_RANGES = {
    "d": (0.0004, 0.1),
    "w_max": (0.004, 0.4),
    "w_min": (-0.4, -0.0004),
    "microcolumns": (1, 30),
}


# ---------------------------------------------------------------------------
# XML-subset document model
# ---------------------------------------------------------------------------


@dataclass
class Element:
    tag: str
    attrs: dict[str, str] = field(default_factory=dict)
    children: list["Element"] = field(default_factory=list)
    text: str = ""

    def find(self, tag: str) -> Optional["Element"]:
        for child in self.children:
            if child.tag == tag:
                return child
        return None

    def find_all(self, tag: str) -> list["Element"]:
        return [child for child in self.children if child.tag == tag]

    def child_text(self, tag: str) -> Optional[str]:
        child = self.find(tag)
        return None if child is None else child.text


def structurally_equal(a: Element, b: Element) -> bool:
    if a.tag != b.tag or a.attrs != b.attrs or a.text != b.text:
        return False
    if len(a.children) != len(b.children):
        return False
    return all(structurally_equal(x, y) for x, y in zip(a.children, b.children))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def _line(self, at: Optional[int] = None) -> int:
        return self.text.count("\n", 0, self.i if at is None else at) + 1

    def error(self, message: str) -> ConfigError:
        return ConfigError(f"line {self._line()}: {message}")

    def _skip_ws(self) -> None:
        while self.i < len(self.text) and self.text[self.i] in " \t\r\n":
            self.i += 1

    def _expect(self, literal: str) -> None:
        if not self.text.startswith(literal, self.i):
            raise self.error(f"expected {literal!r}")
        self.i += len(literal)

    def _read_name(self) -> str:
        start = self.i
        while self.i < len(self.text) and (self.text[self.i].isalnum() or self.text[self.i] in "_-."):
            self.i += 1
        if self.i == start:
            raise self.error("expected a name")
        return self.text[start:self.i]

    def _read_attrs(self) -> dict[str, str]:
        attrs: dict[str, str] = {}
        while True:
            self._skip_ws()
            if self.i >= len(self.text):
                raise self.error("unterminated tag")
            if self.text[self.i] in ">/?":
                return attrs
            name = self._read_name()
            self._skip_ws()
            self._expect("=")
            self._skip_ws()
            self._expect('"')
            end = self.text.find('"', self.i)
            if end == -1:
                raise self.error(f"unterminated attribute value for {name!r}")
            attrs[name] = self.text[self.i:end]
            self.i = end + 1

    def parse(self) -> Element:
        self._skip_ws()
        if self.text.startswith("<?", self.i):
            end = self.text.find("?>", self.i)
            if end == -1:
                raise self.error("unterminated prolog")
            self.i = end + 2
            self._skip_ws()
        root = self._parse_element()
        self._skip_ws()
        if self.i < len(self.text):
            raise self.error("content after the root element")
        return root

    def _parse_element(self) -> Element:
        self._expect("<")
        tag = self._read_name()
        attrs = self._read_attrs()
        if self.text.startswith("/>", self.i):
            self.i += 2
            return Element(tag, attrs)
        self._expect(">")
        element = Element(tag, attrs)
        text_parts: list[str] = []
        while True:
            next_tag = self.text.find("<", self.i)
            if next_tag == -1:
                raise self.error(f"unclosed element <{tag}>")
            text_parts.append(self.text[self.i:next_tag])
            self.i = next_tag
            if self.text.startswith("</", self.i):
                self.i += 2
                closing = self._read_name()
                if closing != tag:
                    raise self.error(f"mismatched closing tag </{closing}> for <{tag}>")
                self._skip_ws()
                self._expect(">")
                element.text = "".join(text_parts).strip()
                return element
            element.children.append(self._parse_element())


def parse_xml(text: str) -> Element:
    return _Parser(text).parse()


def serialize_xml(root: Element) -> str:
    lines = ['<?xml version="1.0" encoding="utf-8"?>']

    def emit(element: Element, depth: int) -> None:
        pad = "  " * depth
        attrs = "".join(f' {k}="{v}"' for k, v in element.attrs.items())
        if element.children:
            lines.append(f"{pad}<{element.tag}{attrs}>")
            for child in element.children:
                emit(child, depth + 1)
            lines.append(f"{pad}</{element.tag}>")
        else:
            lines.append(f"{pad}<{element.tag}{attrs}>{element.text}</{element.tag}>")

    emit(root, 0)
    return "\n".join(lines) + "\n"


def _num(text: str, where: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: non-numeric scalar {text!r}") from None


def _req(element: Element, tag: str, where: str) -> str:
    value = element.child_text(tag)
    if value is None:
        raise ConfigError(f"{where}: missing <{tag}>")
    return value


# ---------------------------------------------------------------------------
# Typed view
# ---------------------------------------------------------------------------


@dataclass
class ReceptorDecl:
    name: str
    n: int
    kind: str  # "image_file" | "state_classifier"
    args: dict[str, str]

    def arg_num(self, key: str, default: Optional[float] = None) -> float:
        if key not in self.args:
            if default is None:
                raise ConfigError(f"receptor {self.name!r}: missing arg {key!r}")
            return default
        return _num(self.args[key], f"receptor {self.name!r} arg {key!r}")


@dataclass
class PlasticityDecl:
    weight_inc: float
    dopamine_plasticity_time: int
    minweight: float
    maxweight: float
    three_factor: bool
    max_tssisi: int


@dataclass
class SectionDecl:
    name: str
    n: int
    chartime: float
    structure_dim: Optional[int] = None
    plasticity: Optional[PlasticityDecl] = None


@dataclass
class LinkDecl:
    from_name: str
    to_name: str
    kind: str = "static"
    policy: str = "full"
    weight: Optional[float] = None
    ini_min: float = 0.0
    ini_max: float = 0.0
    probability: float = 1.0
    maxnpre: Optional[int] = None
    delay: int = 0


@dataclass
class ReadoutDecl:
    lib: str
    output: str


@dataclass
class ConfigDocument:
    root: Element
    globals: list[float]
    receptors: list[ReceptorDecl]
    ncopies: Optional[int]
    sections: list[SectionDecl]
    links: list[LinkDecl]
    readout: Optional[ReadoutDecl]

    def receptor(self, kind: str) -> Optional[ReceptorDecl]:
        for receptor in self.receptors:
            if receptor.kind == kind:
                return receptor
        return None

    def section(self, name: str) -> SectionDecl:
        for section in self.sections:
            if section.name == name:
                return section
        raise KeyError(name)

    @property
    def class_dim(self) -> int:
        dims = {s.structure_dim for s in self.sections if s.structure_dim is not None}
        if len(dims) > 1:
            raise ConfigError(f"sections disagree on class dimension: {sorted(dims)}")
        if dims:
            return dims.pop()
        label = self.receptor("state_classifier")
        return label.n if label is not None else 10

    def encoding_params(self) -> EncodingParams:
        image = self.receptor("image_file")
        if image is None:
            raise ConfigError("document declares no image receptor")
        presentation = int(image.arg_num("image_presentation_time"))
        period = int(image.arg_num("ntact_per_image"))
        max_freq = image.arg_num("maxfrequency", 1.0)
        label = self.receptor("state_classifier")
        return EncodingParams(
            presentation_ms=presentation,
            silence_ms=period - presentation,
            max_spikes=round(presentation * max_freq),
            pixel_nodes=image.n,
            class_nodes=label.n if label is not None else 10,
        )

    @property
    def learning_until(self) -> float:
        label = self.receptor("state_classifier")
        if label is None or "learning_time" not in label.args:
            return float("inf")
        return label.arg_num("learning_time")


def _extract_receptor(node: Element) -> ReceptorDecl:
    name = node.attrs.get("name", "")
    if not name:
        raise ConfigError("RECEPTORS element without a name attribute")
    n = int(_num(node.attrs.get("n", ""), f"receptor {name!r} size"))
    impl = node.find("Implementation")
    if impl is None:
        raise ConfigError(f"receptor {name!r}: missing <Implementation>")
    lib = impl.attrs.get("lib", "")
    kind = {"fromFile": "image_file", "StateClassifier": "state_classifier"}.get(lib)
    if kind is None:
        raise ConfigError(f"receptor {name!r}: unknown implementation lib {lib!r}")
    args_node = impl.find("args")
    args: dict[str, str] = {}

    def collect(node: Element) -> None:
        for child in node.children:
            if child.children:
                collect(child)
            else:
                args[child.tag] = child.text

    if args_node is not None:
        collect(args_node)
    decl = ReceptorDecl(name, n, kind, args)
    if kind == "image_file":
        width = int(decl.arg_num("width", 0))
        height = int(decl.arg_num("height", 0))
        if width * height != n:
            raise ConfigError(f"receptor {name!r}: {width}x{height} does not cover n={n}")
        if decl.arg_num("ntact_per_image") < decl.arg_num("image_presentation_time"):
            raise ConfigError(f"receptor {name!r}: presentation exceeds the image period")
    return decl


def _extract_section(node: Element) -> SectionDecl:
    name = node.attrs.get("name", "")
    if not name:
        raise ConfigError("Section element without a name attribute")
    props = node.find("props")
    if props is None:
        raise ConfigError(f"section {name!r}: missing <props>")
    where = f"section {name!r}"
    n = int(_num(_req(props, "n", where), where))
    chartime = _num(_req(props, "chartime", where), where)

    structure = props.find("Structure")
    structure_dim = None
    if structure is not None and "dimension" in structure.attrs:
        structure_dim = int(_num(structure.attrs["dimension"], f"{where} structure"))

    plasticity = None
    if props.find("weight_inc") is not None or props.find("three_factor_plasticity") is not None:
        plasticity = PlasticityDecl(
            weight_inc=_num(_req(props, "weight_inc", where), where),
            dopamine_plasticity_time=int(_num(_req(props, "dopamine_plasticity_time", where), where)),
            minweight=_num(_req(props, "minweight", where), where),
            maxweight=_num(_req(props, "maxweight", where), where),
            three_factor=props.find("three_factor_plasticity") is not None,
            max_tssisi=int(_num(_req(props, "maxTSSISI", where), where)),
        )
    return SectionDecl(name, n, chartime, structure_dim, plasticity)


def _extract_link(node: Element) -> LinkDecl:
    from_name = node.attrs.get("from", "")
    to_name = node.attrs.get("to", "")
    if not from_name or not to_name:
        raise ConfigError("Link element needs from and to attributes")
    kind = node.attrs.get("type", "static")
    policy = node.attrs.get("policy", "full")
    where = f"link {from_name}->{to_name}"

    weight = None
    if node.find("weight") is not None:
        weight = _num(node.child_text("weight"), where)

    ini_min = ini_max = 0.0
    if kind == "plastic":
        ini = node.find("IniResource")
        if ini is None:
            raise ConfigError(f"{where}: plastic link without <IniResource>")
        ini_min = _num(_req(ini, "min", where), where)
        ini_max = _num(_req(ini, "max", where), where)
    elif weight is None:
        raise ConfigError(f"{where}: non-plastic link without <weight>")

    probability = 1.0
    if node.find("probability") is not None:
        probability = _num(node.child_text("probability"), where)

    maxnpre = None
    if node.find("maxnpre") is not None:
        maxnpre = int(_num(node.child_text("maxnpre"), where))

    delay = 0
    delay_node = node.find("Delay")
    if delay_node is not None:
        lo = _num(_req(delay_node, "min", where), where)
        hi = _num(_req(delay_node, "max", where), where)
        if lo != hi:
            raise ConfigError(f"{where}: only fixed delays (min == max) are supported")
        delay = int(lo)

    return LinkDecl(from_name, to_name, kind, policy, weight,
                    ini_min, ini_max, probability, maxnpre, delay)


def document_from_root(root: Element) -> ConfigDocument:
    if root.tag != "SNN":
        raise ConfigError(f"root element is <{root.tag}>, expected <SNN>")

    globals_ = [_num(g.text, "Global") for g in root.find_all("Global")]

    receptors = [_extract_receptor(r) for r in root.find_all("RECEPTORS")]

    sections: list[SectionDecl] = []
    links: list[LinkDecl] = []
    ncopies = None
    network = root.find("NETWORK")
    if network is not None:
        if "ncopies" in network.attrs:
            ncopies = int(_num(network.attrs["ncopies"], "NETWORK ncopies"))
        sections_node = network.find("Sections")
        if sections_node is not None:
            sections = [_extract_section(s) for s in sections_node.find_all("Section")]
            links = [_extract_link(l) for l in sections_node.find_all("Link")]

    readout = None
    readout_node = root.find("Readout")
    if readout_node is not None:
        readout = ReadoutDecl(
            lib=readout_node.attrs.get("lib", ""),
            output=_req(readout_node, "output", "Readout"),
        )

    doc = ConfigDocument(root, globals_, receptors, ncopies, sections, links, readout)
    _validate(doc)
    return doc


def _validate(doc: ConfigDocument) -> None:
    names: set[str] = set()
    for receptor in doc.receptors:
        if receptor.name in names:
            raise ConfigError(f"duplicate receptor name {receptor.name!r}")
        names.add(receptor.name)
    for section in doc.sections:
        if section.name in names:
            raise ConfigError(f"duplicate section name {section.name!r}")
        names.add(section.name)

    section_names = {s.name for s in doc.sections}
    for link in doc.links:
        if link.from_name not in names:
            raise ConfigError(f"link source {link.from_name!r} undeclared")
        if link.to_name not in section_names:
            raise ConfigError(f"link target {link.to_name!r} is not a declared section")

    if doc.ncopies is not None:
        for section in doc.sections:
            if section.structure_dim is not None and section.n != section.structure_dim * doc.ncopies:
                raise ConfigError(
                    f"section {section.name!r}: n={section.n} contradicts "
                    f"{doc.ncopies} copies of dimension {section.structure_dim}"
                )

    if doc.readout is not None and doc.readout.output not in section_names:
        raise ConfigError(f"readout section {doc.readout.output!r} undeclared")

    doc.class_dim  # raises on disagreement


def parse_config(text: str) -> ConfigDocument:
    """Parse dialect text into a validated document."""
    return document_from_root(parse_xml(text))


def serialize_config(doc: ConfigDocument) -> str:
    """Render a document back to dialect text (round-trips structurally)."""
    return serialize_xml(doc.root)


def load_config(path) -> ConfigDocument:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


def reference_text() -> str:
    """The packaged golden network description."""
    return importlib.resources.files("colanet").joinpath("data/reference.nnc").read_text("utf-8")


def reference_config() -> ConfigDocument:
    return parse_config(reference_text())


# ---------------------------------------------------------------------------
# Generation from hyperparameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hyperparameters:
    d: float  # learning rate (depression step == net potentiation step)
    w_max: float
    w_min: float
    microcolumns: int

    def __post_init__(self):
        for key, value in (("d", self.d), ("w_max", self.w_max),
                           ("w_min", self.w_min), ("microcolumns", self.microcolumns)):
            lo, hi = HYPERPARAMETER_RANGES[key]
            if not lo <= value <= hi:
                raise ConfigError(f"hyperparameter {key}={value} outside [{lo}, {hi}]")


def _fmt(value) -> str:
    if isinstance(value, int):
        return str(value)
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _leaf(tag: str, value="", **attrs) -> Element:
    return Element(tag, dict(attrs), [], _fmt(value) if not isinstance(value, str) else value)


def _section_element(name: str, n: int, chartime: float, class_dim: Optional[int] = None,
                     plastic: Optional[dict] = None) -> Element:
    props = Element("props")
    props.children.append(_leaf("n", n))
    if class_dim is not None:
        props.children.append(Element("Structure", {"type": "O", "dimension": str(class_dim)}))
    props.children.append(_leaf("chartime", chartime))
    if plastic:
        props.children.append(_leaf("weight_inc", plastic["weight_inc"]))
        props.children.append(_leaf("dopamine_plasticity_time", plastic["dopamine_plasticity_time"]))
        props.children.append(_leaf("minweight", plastic["minweight"]))
        props.children.append(_leaf("maxweight", plastic["maxweight"]))
        props.children.append(Element("three_factor_plasticity"))
        props.children.append(_leaf("maxTSSISI", plastic["max_tssisi"]))
    return Element("Section", {"name": name}, [props])


def _link_element(from_name: str, to_name: str, kind: Optional[str] = None,
                  policy: Optional[str] = None, weight=None, ini=None,
                  probability=None, maxnpre=None, delay=None) -> Element:
    attrs = {"from": from_name, "to": to_name}
    if policy is not None:
        attrs["policy"] = policy
    if kind is not None:
        attrs["type"] = kind
    node = Element("Link", attrs)
    if ini is not None:
        node.children.append(Element("IniResource", {"type": "uni"},
                                     [_leaf("min", ini), _leaf("max", ini)]))
    if weight is not None:
        node.children.append(_leaf("weight", weight))
    if probability is not None:
        node.children.append(_leaf("probability", probability))
    if maxnpre is not None:
        node.children.append(_leaf("maxnpre", maxnpre))
    if delay is not None:
        node.children.append(Element("Delay", {"type": "uni"},
                                     [_leaf("min", delay), _leaf("max", delay)]))
    return node


def generate_config(h: Hyperparameters, learning_time: int = 1_200_000,
                    image_source: str = "MNIST.bin", target_source: str = "MNIST.target",
                    prediction_file: str = "restmp.csv", class_dim: int = 10,
                    pixel_nodes: int = 784) -> ConfigDocument:
    """Build a reference-shaped document for one hyperparameter point.

    Search-space weights are expressed against threshold 1 with w_max around
    0.1; the emitted document multiplies them by UNIT_SCALE so the reference
    optimum lands on the reference network's own scalars.
    """
    m = h.microcolumns
    column_n = class_dim * m
    w_max = h.w_max * UNIT_SCALE
    w_min = h.w_min * UNIT_SCALE
    d = h.d * UNIT_SCALE
    ini_resource = w_max * INI_RESOURCE_RATIO

    root = Element("SNN")
    root.children.append(_leaf("Global", 0))
    root.children.append(_leaf("Global", 0.023817))

    side = int(round(pixel_nodes ** 0.5))
    image_args = Element("args", {"type": "image"}, [
        _leaf("source", image_source),
        Element("Special", {}, [
            _leaf("width", side),
            _leaf("height", side),
            _leaf("offset", 0),
            _leaf("ntact_per_image", 20),
            _leaf("image_presentation_time", 10),
            _leaf("maxfrequency", "1."),
        ]),
    ])
    root.children.append(Element("RECEPTORS", {"name": "R", "n": str(pixel_nodes)}, [
        Element("Implementation", {"lib": "fromFile"}, [image_args]),
    ]))

    target_args = Element("args", {}, [
        _leaf("target_file", target_source),
        _leaf("spike_period", 1),
        _leaf("state_duration", 20),
        _leaf("learning_time", learning_time),
        _leaf("no_class", "-"),
        _leaf("prediction_file", prediction_file),
    ])
    root.children.append(Element("RECEPTORS", {"name": "Target", "n": str(class_dim)}, [
        Element("Implementation", {"lib": "StateClassifier"}, [target_args]),
    ]))

    plastic = {
        "weight_inc": -d,
        "dopamine_plasticity_time": 10,
        "minweight": w_min,
        "maxweight": w_max,
        "max_tssisi": 10,
    }
    sections = Element("Sections", {}, [
        _section_element("L", column_n, 3, class_dim, plastic),
        _section_element("WTA", column_n, 1, class_dim),
        _section_element("REWGATE", column_n, 1, class_dim),
        _section_element("OUT", class_dim, 1),
        _section_element("BIASGATE", class_dim, 1),
        _link_element("R", "L", kind="plastic", ini=ini_resource, probability=1, maxnpre=1000),
        _link_element("L", "WTA", policy="aligned", weight=9),
        _link_element("WTA", "WTA", policy="all-to-all-sections", kind="gating", weight=-10),
        _link_element("WTA", "REWGATE", policy="aligned", kind="gating", weight=1),
        _link_element("REWGATE", "L", policy="aligned", kind="reward", weight=d),
        _link_element("WTA", "OUT", policy="aligned", weight=10),
        _link_element("OUT", "BIASGATE", policy="aligned", kind="gating", weight=-20),
        _link_element("Target", "REWGATE", policy="aligned", weight=10),
        _link_element("Target", "BIASGATE", policy="aligned", weight=10, delay=10),
        _link_element("Target", "BIASGATE", policy="exclusive", weight=-30),
        _link_element("BIASGATE", "L", policy="aligned", weight=3),
    ])
    root.children.append(Element("NETWORK", {"ncopies": str(m)}, [sections]))
    root.children.append(Element("Readout", {"lib": "StateClassifier"}, [_leaf("output", "OUT")]))

    return document_from_root(root)


# ---------------------------------------------------------------------------
# Compilation into a runnable network
# ---------------------------------------------------------------------------


def build_network(doc: ConfigDocument, seed: int) -> Network:
    """Materialize a document into a ready-to-run engine instance.

    Document weights are expressed against a firing threshold of UNIT_SCALE;
    the engine is threshold-normalized, so every weight-dimensioned scalar
    (link weights, resource bounds, plasticity steps) is divided by
    UNIT_SCALE here. Times, sizes, and probabilities pass through unchanged.
    """
    class_dim = doc.class_dim
    learning_until = doc.learning_until
    scale = 1.0 / UNIT_SCALE

    # Dopamine magnitude rides on the reward link into each plastic section.
    reward_weight: dict[str, float] = {}
    for link in doc.links:
        if link.kind == "reward" and link.weight is not None:
            reward_weight[link.to_name] = abs(link.weight) * scale

    section_specs = []
    for section in doc.sections:
        params = None
        if section.plasticity is not None:
            decl = section.plasticity
            d_h = abs(decl.weight_inc) * scale
            params = PlasticityParams(
                d_h=d_h,
                d_d=reward_weight.get(section.name, d_h),
                dopamine_window=decl.dopamine_plasticity_time,
                eligibility_window=decl.max_tssisi,
                learning_until=learning_until,
            )
        section_specs.append(SectionSpec(section.name, section.n, section.chartime, params))

    plasticity_by_section = {s.name: s.plasticity for s in doc.sections}
    link_specs = []
    for link in doc.links:
        w_min = w_max = 0.0
        if link.kind == "plastic":
            decl = plasticity_by_section.get(link.to_name)
            if decl is None:
                raise ConfigError(
                    f"plastic link into {link.to_name!r} but the section declares no plasticity"
                )
            w_min, w_max = decl.minweight * scale, decl.maxweight * scale
        link_specs.append(LinkSpec(
            from_name=link.from_name,
            to_name=link.to_name,
            kind=link.kind,
            policy=link.policy,
            weight=(link.weight if link.weight is not None else 0.0) * scale,
            delay=link.delay,
            probability=link.probability,
            ini_resource=(link.ini_min * scale, link.ini_max * scale),
            w_min=w_min,
            w_max=w_max,
            max_pre=link.maxnpre,
        ))

    image = doc.receptor("image_file")
    label = doc.receptor("state_classifier")
    return Network(
        sections=section_specs,
        links=link_specs,
        receptors={r.name: r.n for r in doc.receptors},
        seed=seed,
        class_dim=class_dim,
        learning_until=learning_until,
        image_receptor=image.name if image else None,
        label_receptor=label.name if label else None,
    )
