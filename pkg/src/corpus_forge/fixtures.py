"""Deterministic fixture generation for tests and the acceptance suite.

Fixtures are seeded and byte-reproducible. The WARC builder writes framing
by hand (it must not depend on the ingest module's serializer), and the
OverlapPairs builder constructs word-set pairs whose exact Jaccard equals
the requested value by counting shared and unique words.
"""

from __future__ import annotations

import gzip
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .model import ConfigError, Document, write_documents

# ---------------------------------------------------------------------------
# sentence banks

PT_SENTENCES: tuple[str, ...] = (
    "O mercado municipal abre todas as manhãs com bancas de fruta fresca e legumes da região.",
    "A biblioteca da cidade guarda manuscritos antigos que os investigadores consultam com cuidado.",
    "Durante o inverno as chuvas enchem os rios e os campos ficam verdes até ao horizonte.",
    "Os pescadores saem da barra ao amanhecer e regressam com o porão cheio de sardinha.",
    "A escola primária organizou uma visita de estudo ao museu de arte contemporânea.",
    "No centro histórico as ruas estreitas sobem até ao castelo que domina a paisagem.",
    "A padaria da esquina vende pão quente e bolos de arroz desde as sete da manhã.",
    "O teatro nacional estreia esta semana uma peça escrita por um dramaturgo açoriano.",
    "As vindimas começam em setembro quando as uvas atingem o grau certo de açúcar.",
    "O município aprovou um plano para ampliar a rede de ciclovias nos próximos anos.",
    "A feira do livro junta editores e leitores numa semana de conversas e descontos.",
    "Os estudantes preparam os exames finais na sala de leitura até ao fecho da biblioteca.",
    "A fábrica de conservas mantém métodos tradicionais que passam de geração em geração.",
    "No verão as praias da costa enchem-se de famílias que procuram o mar calmo.",
    "O observatório convida o público para uma noite de observação de estrelas na serra.",
    "A junta de freguesia distribuiu árvores de fruto pelos moradores interessados.",
    "O comboio regional atravessa vales profundos e para em aldeias com estações centenárias.",
    "A cooperativa agrícola investiu em rega eficiente para enfrentar os meses secos.",
    "O jornal local publica todas as sextas uma página dedicada à história da região.",
    "As obras na ponte obrigam os automobilistas a um desvio de quinze minutos.",
    "A orquestra juvenil ensaia no auditório da escola secundária às terças e quintas.",
    "O restaurante junto ao rio serve caldeirada e arroz de marisco aos fins de semana.",
    "A associação de moradores pediu mais iluminação pública para o bairro antigo.",
    "Os arqueólogos encontraram moedas romanas durante as escavações junto à muralha.",
    "A universidade lançou um curso livre de escrita criativa aberto a toda a comunidade.",
    "O mercado de natal ocupa a praça central com artesanato e doces regionais.",
    "A quinta pedagógica recebe turmas que aprendem a tratar dos animais da capoeira.",
    "O clube de xadrez reúne jogadores de todas as idades no salão da coletividade.",
    "As amendoeiras floridas atraem visitantes ao planalto no final do inverno.",
    "A farmácia de serviço fica aberta toda a noite segundo a escala publicada.",
    "O governo anunciou apoios para a reabilitação de casas degradadas nos centros urbanos.",
    "A banda filarmónica celebra cem anos com um concerto no coreto do jardim.",
    "Os bombeiros voluntários fizeram um simulacro de incêndio na zona industrial.",
    "A doca recebe veleiros de vários países durante a regata de agosto.",
    "O professor de história levou os alunos a percorrer a rota das igrejas românicas.",
    "A adega cooperativa abriu as portas para provas comentadas do vinho novo.",
    "O posto de turismo preparou roteiros a pé pelos miradouros da encosta.",
    "As salinas produzem flor de sal que os restaurantes da região disputam.",
    "A oficina de bicicletas recupera modelos antigos para o passeio de domingo.",
    "O centro de saúde alargou o horário das consultas durante a época da gripe.",
    "A tuna académica percorreu as ruas da baixa a cantar serenatas tradicionais.",
    "O moinho restaurado volta a moer cereal nos dias de vento favorável.",
    "As camélias do parque municipal florescem entre janeiro e março.",
    "A leitaria histórica mantém o balcão de mármore e as cadeiras de madeira.",
    "O grupo de teatro amador apresenta uma comédia no salão paroquial este sábado.",
    "A serração junto ao pinhal fornece madeira para os estaleiros da costa.",
    "Os escuteiros limparam os trilhos da serra antes do acampamento de verão.",
    "A confeitaria prepara ovos moles segundo a receita registada da casa.",
)

EN_SENTENCES: tuple[str, ...] = (
    "The municipal market opens every morning with stalls of fresh fruit and local vegetables.",
    "The city library keeps ancient manuscripts that researchers consult with great care.",
    "During the winter the rains fill the rivers and the fields stay green to the horizon.",
    "The fishermen leave the harbour at dawn and return with the hold full of sardines.",
    "The primary school organized a field trip to the museum of contemporary art.",
    "In the old town the narrow streets climb toward the castle that dominates the view.",
    "The corner bakery sells warm bread and rice cakes from seven in the morning.",
    "The national theatre premieres a play written by an island playwright this week.",
    "The grape harvest begins in September when the fruit reaches the right sweetness.",
    "The council approved a plan to extend the cycling network over the coming years.",
    "The book fair brings publishers and readers together for a week of talks.",
    "Students prepare for final exams in the reading room until the library closes.",
    "The canning factory keeps traditional methods passed from one generation to the next.",
    "In summer the beaches along the coast fill with families looking for calm seas.",
    "The observatory invites the public to a night of stargazing on the mountain.",
    "The parish office handed out fruit trees to any residents who wanted them.",
    "The regional train crosses deep valleys and stops at villages with old stations.",
    "The farming cooperative invested in efficient irrigation to face the dry months.",
    "The local newspaper publishes a page about regional history every Friday.",
    "Work on the bridge forces drivers onto a detour of about fifteen minutes.",
    "The youth orchestra rehearses in the school auditorium on Tuesdays and Thursdays.",
    "The restaurant by the river serves fish stew and seafood rice on weekends.",
    "The residents association asked for better street lighting in the old quarter.",
    "Archaeologists found Roman coins during the excavations beside the city wall.",
    "The university launched a free creative writing course open to the whole community.",
    "The Christmas market fills the main square with crafts and regional sweets.",
    "The teaching farm hosts classes that learn to care for the animals in the yard.",
    "The chess club gathers players of all ages in the community hall.",
    "The flowering almond trees draw visitors to the plateau at the end of winter.",
    "The duty pharmacy stays open all night according to the published rota.",
    "The government announced support for restoring run-down houses in town centres.",
    "The brass band celebrates a century with a concert at the garden bandstand.",
    "The volunteer firefighters ran a drill at the industrial estate last week.",
    "The dock welcomes sailing boats from many countries during the August regatta.",
    "The history teacher took the students along the route of the Romanesque churches.",
    "The wine cooperative opened its doors for guided tastings of the new vintage.",
    "The tourist office prepared walking routes along the viewpoints of the hillside.",
    "The salt pans produce flakes of salt that the local restaurants compete for.",
    "The bicycle workshop restores old models for the Sunday ride along the river.",
    "The health centre extended consultation hours during the flu season.",
)


# ---------------------------------------------------------------------------
# fixture spec


class FixtureKind(Enum):
    WARC_MINIMAL = "WarcMinimal"
    PORTUGUESE_PARAGRAPHS = "PortugueseParagraphs"
    REPETITION_TEXT = "RepetitionText"
    PII_CASES = "PiiCases"
    OVERLAP_PAIRS = "OverlapPairs"
    SFT_ENTRIES = "SftEntries"


@dataclass(frozen=True)
class FixtureSpec:
    kind: FixtureKind
    size: int
    seed: int
    jaccard: float | None = None

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ConfigError("fixture size must be >= 1")
        if self.kind is FixtureKind.OVERLAP_PAIRS:
            if self.jaccard is None or not 0.0 <= self.jaccard <= 1.0:
                raise ConfigError("OverlapPairs needs jaccard in [0, 1]")
        elif self.jaccard is not None:
            raise ConfigError("jaccard only applies to OverlapPairs")


# ---------------------------------------------------------------------------
# WARC fixtures (framing written by hand, independent of the ingest module)

_CRLF = b"\r\n"


def build_warc_record_bytes(
    record_type: str,
    payload: bytes,
    *,
    target_uri: str | None = None,
    warc_date: str = "2020-05-17T10:15:00Z",
    content_type: str | None = "application/http; msgtype=response",
    record_id: str = "<urn:uuid:00000000-0000-0000-0000-000000000001>",
    version: str = "WARC/1.0",
) -> bytes:
    headers = [
        f"WARC-Type: {record_type}",
        f"WARC-Date: {warc_date}",
        f"WARC-Record-ID: {record_id}",
        f"Content-Length: {len(payload)}",
    ]
    if target_uri is not None:
        headers.insert(1, f"WARC-Target-URI: {target_uri}")
    if content_type is not None:
        headers.append(f"Content-Type: {content_type}")
    head = version.encode("ascii") + _CRLF
    head += _CRLF.join(h.encode("utf-8") for h in headers) + _CRLF + _CRLF
    return head + payload + _CRLF + _CRLF


def build_http_html_payload(
    body: str,
    *,
    charset: str | None = "utf-8",
    content_type: str = "text/html",
    status: str = "200 OK",
) -> bytes:
    encoding = charset or "utf-8"
    raw = body.encode(encoding, errors="replace")
    ctype = content_type if charset is None else f"{content_type}; charset={charset}"
    head = (
        f"HTTP/1.1 {status}\r\n"
        f"Content-Type: {ctype}\r\n"
        f"Content-Length: {len(raw)}\r\n\r\n"
    )
    return head.encode("ascii") + raw


def _warc_fixture_pages(size: int, seed: int) -> list[tuple[str, str, str]]:
    rng = random.Random(seed)
    pages = []
    for i in range(size):
        n = 5 + rng.randrange(4)
        body = "".join(
            f"<p>{s}</p>" for s in rng.sample(PT_SENTENCES, n)
        )
        html = f"<html><head><title>Página {i}</title></head><body>{body}</body></html>"
        url = f"https://exemplo{i % 7}.pt/artigo/{i}"
        date = f"20{18 + i % 5:02d}-0{1 + i % 9}-{10 + i % 18:02d}T08:30:00Z"
        pages.append((url, date, html))
    return pages


def build_warc_minimal(size: int, seed: int, *, gzip_members: bool = False) -> bytes:
    """A parseable WARC stream of `size` response records."""
    chunks = []
    for i, (url, date, html) in enumerate(_warc_fixture_pages(size, seed)):
        record = build_warc_record_bytes(
            "response",
            build_http_html_payload(html),
            target_uri=url,
            warc_date=date,
            record_id=(
                f"<urn:uuid:{seed & 0xFFFFFFFF:08x}-0000-4000-8000-{i:012x}>"
            ),
        )
        chunks.append(gzip.compress(record, mtime=0) if gzip_members else record)
    return b"".join(chunks)


def scan_warc_record_count(raw: bytes) -> int:
    """Hand-written boundary scanner used to cross-check the streaming reader."""
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    count = 0
    pos = 0
    while pos < len(raw):
        if not raw[pos:].startswith(b"WARC/"):
            break
        head_end = raw.index(b"\r\n\r\n", pos)
        header_block = raw[pos:head_end].decode("utf-8", errors="replace")
        length = None
        for line in header_block.split("\r\n")[1:]:
            name, _, value = line.partition(":")
            if name.strip().lower() == "content-length":
                length = int(value.strip())
        if length is None:
            break
        body_end = head_end + 4 + length + 4
        if body_end > len(raw):
            break
        count += 1
        pos = body_end
    return count


# ---------------------------------------------------------------------------
# document corpora


def build_portuguese_paragraphs(size: int, seed: int) -> list[Document]:
    """Natural multi-paragraph Portuguese documents that pass the default filters."""
    rng = random.Random(seed)
    docs = []
    for i in range(size):
        n_paras = 2 + rng.randrange(3)
        sentences = rng.sample(PT_SENTENCES, min(len(PT_SENTENCES), 3 * n_paras))
        paras = [
            " ".join(sentences[3 * p : 3 * p + 3]) for p in range(n_paras)
        ]
        docs.append(
            Document(
                id=f"pt-{seed:x}-{i:05d}",
                text="\n\n".join(paras),
                source_url=f"https://noticias{i % 9}.pt/artigo/{i}",
                capture_date=None,
            )
        )
    return docs


def build_repetition_text(size: int, seed: int) -> list[Document]:
    """Documents dominated by repeated lines; duplicate-line fraction >= 0.5."""
    rng = random.Random(seed)
    docs = []
    for i in range(size):
        base = rng.sample(PT_SENTENCES, 3)
        lines = [base[0]] * (4 + rng.randrange(4)) + base[1:]
        rng.shuffle(lines)
        docs.append(
            Document(
                id=f"rep-{seed:x}-{i:05d}",
                text="\n".join(lines),
                source_url=f"https://spam{i % 3}.pt/pagina/{i}",
            )
        )
    return docs


HAND_REPETITION_LINES: tuple[str, ...] = (
    "A câmara municipal anunciou o novo horário dos transportes.",
    "Consulte aqui todas as novidades da semana em detalhe.",
    "A câmara municipal anunciou o novo horário dos transportes.",
    "O festival de música regressa ao parque da cidade em julho.",
    "A câmara municipal anunciou o novo horário dos transportes.",
    "As inscrições para as oficinas de verão já estão abertas.",
    "Consulte aqui todas as novidades da semana em detalhe.",
    "O mercado de produtores realiza-se no primeiro domingo do mês.",
    "A piscina municipal encerra para manutenção na próxima semana.",
    "Veja o programa completo das festas da cidade deste ano.",
)
# 10 lines; "A câmara…" ×3 and "Consulte…" ×2 → duplicate-line fraction 3/10.
HAND_REPETITION_TEXT = "\n".join(HAND_REPETITION_LINES)
HAND_REPETITION_DUP_LINE_FRAC = 0.3


# ---------------------------------------------------------------------------
# PII regression corpus (hand-built; counts are per category)


@dataclass(frozen=True)
class PiiCase:
    text: str
    redacted: str
    emails: int = 0
    phones: int = 0
    public_ips: int = 0


PII_CASES: tuple[PiiCase, ...] = (
    # -- emails that must be redacted
    PiiCase("contacte joao@exemplo.pt", "contacte <EMAIL>", emails=1),
    PiiCase(
        "Envie para maria.silva@empresa.com.br até sexta.",
        "Envie para <EMAIL> até sexta.",
        emails=1,
    ),
    PiiCase("Email: VENDAS@LOJA.PT", "Email: <EMAIL>", emails=1),
    PiiCase("duvidas+info@sub.dominio.org responde depressa", "<EMAIL> responde depressa", emails=1),
    PiiCase("o endereço ana_93@mail.pt.", "o endereço <EMAIL>.", emails=1),
    PiiCase("suporte (24h): apoio@servico.net!", "suporte (24h): <EMAIL>!", emails=1),
    PiiCase("mail para px@y.io enviado", "mail para <EMAIL> enviado", emails=1),
    PiiCase(
        "escreva a rui.costa99@uni.edu.pt ou a sec@uni.edu.pt",
        "escreva a <EMAIL> ou a <EMAIL>",
        emails=2,
    ),
    # -- obfuscated or malformed emails that must survive
    PiiCase("contacto joao (at) exemplo (dot) pt", "contacto joao (at) exemplo (dot) pt"),
    PiiCase("escreva para maria arroba sapo ponto pt", "escreva para maria arroba sapo ponto pt"),
    PiiCase("user at example dot com não é válido", "user at example dot com não é válido"),
    PiiCase("email inválido joao@@ex detectado", "email inválido joao@@ex detectado"),
    PiiCase("o símbolo @ sozinho não conta", "o símbolo @ sozinho não conta"),
    # -- phones that must be redacted
    PiiCase("ligue +351 912 345 678", "ligue <PHONE>", phones=1),
    PiiCase("+351912345678 é o número", "<PHONE> é o número", phones=1),
    PiiCase("telefone: 912345678", "telefone: <PHONE>", phones=1),
    PiiCase("912 345 678 ou 213 456 789", "<PHONE> ou <PHONE>", phones=2),
    PiiCase("número fixo 212345678.", "número fixo <PHONE>.", phones=1),
    PiiCase("+44 20 7946 0958 (Londres)", "<PHONE> (Londres)", phones=1),
    PiiCase("+351 21 094 3000 geral", "<PHONE> geral", phones=1),
    PiiCase("contacto móvel 961 234 567 disponível", "contacto móvel <PHONE> disponível", phones=1),
    PiiCase("linha azul 300 123 456", "linha azul <PHONE>", phones=1),
    # -- digit strings that must survive
    PiiCase("data 21/03/2024 confirmada", "data 21/03/2024 confirmada"),
    PiiCase("reunião em 2024-03-21 às 15:30", "reunião em 2024-03-21 às 15:30"),
    PiiCase("o ano de 1974 foi marcante", "o ano de 1974 foi marcante"),
    PiiCase("código postal 4000-123 Porto", "código postal 4000-123 Porto"),
    PiiCase("fatura n.º 123456789", "fatura n.º 123456789"),
    PiiCase("saldo de 487.654.321 euros", "saldo de 487.654.321 euros"),
    PiiCase("o NIF 501964843 da empresa", "o NIF 501964843 da empresa"),
    PiiCase("matrícula 91-23-AB registada", "matrícula 91-23-AB registada"),
    PiiCase("o preço é 912,45 euros", "o preço é 912,45 euros"),
    PiiCase("telefone avariado 912 34 56", "telefone avariado 912 34 56"),
    PiiCase("GPS 38.736946, -9.142685", "GPS 38.736946, -9.142685"),
    PiiCase("use a porta 8080 do servidor", "use a porta 8080 do servidor"),
    PiiCase("pedido 9123456789012345 em processamento", "pedido 9123456789012345 em processamento"),
    # -- public IPs that must be redacted
    PiiCase("servidor em 8.8.8.8", "servidor em <IP>", public_ips=1),
    PiiCase("acesso de 201.17.32.4 registado.", "acesso de <IP> registado.", public_ips=1),
    PiiCase("ping 193.136.1.1 ok", "ping <IP> ok", public_ips=1),
    PiiCase("IPv6 2001:4860:4860::8888 público", "IPv6 <IP> público", public_ips=1),
    PiiCase("cliente 2a02:c7f:1234::1 ligou", "cliente <IP> ligou", public_ips=1),
    PiiCase("pedido veio de 94.132.7.9.", "pedido veio de <IP>.", public_ips=1),
    # -- private/reserved/odd addresses that must survive
    PiiCase("IP privado 10.0.0.1 da rede", "IP privado 10.0.0.1 da rede"),
    PiiCase("gateway 172.16.5.4 interno", "gateway 172.16.5.4 interno"),
    PiiCase("localhost 127.0.0.1 responde", "localhost 127.0.0.1 responde"),
    PiiCase("link-local 169.254.1.10 ignorado", "link-local 169.254.1.10 ignorado"),
    PiiCase("rede de testes 192.0.2.5 da documentação", "rede de testes 192.0.2.5 da documentação"),
    PiiCase("bloco 198.51.100.7 reservado", "bloco 198.51.100.7 reservado"),
    PiiCase("exemplo 203.0.113.9 nos manuais", "exemplo 203.0.113.9 nos manuais"),
    PiiCase("máscara 255.255.255.0 aplicada", "máscara 255.255.255.0 aplicada"),
    PiiCase("túnel para 100.64.0.7 partilhado", "túnel para 100.64.0.7 partilhado"),
    PiiCase("loopback ::1 local", "loopback ::1 local"),
    PiiCase("fe80::1 é link-local", "fe80::1 é link-local"),
    PiiCase("rede interna fd00::1 isolada", "rede interna fd00::1 isolada"),
    PiiCase("ssh root@192.168.0.10 falhou", "ssh root@192.168.0.10 falhou"),
    PiiCase("endereço 256.1.1.1 não existe", "endereço 256.1.1.1 não existe"),
    # -- version strings and code that must survive
    PiiCase("versão 2.4.1.1 disponível", "versão 2.4.1.1 disponível"),
    PiiCase("atualizado para v2.4.1.1 ontem", "atualizado para v2.4.1.1 ontem"),
    PiiCase("software na versão 10.2.0.14", "software na versão 10.2.0.14"),
    PiiCase("v 1.2.3.4 estável", "v 1.2.3.4 estável"),
    PiiCase("build 2.4.1.1-beta publicada", "build 2.4.1.1-beta publicada"),
    PiiCase("capítulo 1.2.3 do manual", "capítulo 1.2.3 do manual"),
    PiiCase("às 12:30:45 o serviço parou", "às 12:30:45 o serviço parou"),
    PiiCase("std::vector continua igual", "std::vector continua igual"),
    PiiCase("total 3.14159 aproximado", "total 3.14159 aproximado"),
    # -- mixed lines
    PiiCase(
        "fale com rui@ex.pt ou 919 888 777",
        "fale com <EMAIL> ou <PHONE>",
        emails=1,
        phones=1,
    ),
    PiiCase(
        "admin@site.pt entrou via 94.132.7.9",
        "<EMAIL> entrou via <IP>",
        emails=1,
        public_ips=1,
    ),
    PiiCase(
        "registo: ana@mail.pt, 912345678, host 8.8.4.4, proxy 10.1.1.1",
        "registo: <EMAIL>, <PHONE>, host <IP>, proxy 10.1.1.1",
        emails=1,
        phones=1,
        public_ips=1,
    ),
)


# ---------------------------------------------------------------------------
# overlap pairs with exact Jaccard


@dataclass(frozen=True)
class OverlapPair:
    set_a: frozenset[str]
    set_b: frozenset[str]
    jaccard: float


def build_overlap_pair(
    jaccard: float, seed: int, index: int, *, target_union: int = 100
) -> OverlapPair:
    """One pair of word sets whose exact Jaccard is the nearest achievable value."""
    frac = Fraction(jaccard).limit_denominator(target_union)
    scale = max(1, round(target_union / frac.denominator))
    shared = frac.numerator * scale
    union = frac.denominator * scale
    unique = union - shared
    ua = unique // 2
    ub = unique - ua
    tag = f"s{seed & 0xFFFFFFFF:08x}p{index:05d}"
    shared_words = [f"{tag}c{j:05d}" for j in range(shared)]
    set_a = frozenset(shared_words + [f"{tag}a{j:05d}" for j in range(ua)])
    set_b = frozenset(shared_words + [f"{tag}b{j:05d}" for j in range(ub)])
    achieved = shared / union if union else 1.0
    return OverlapPair(set_a, set_b, achieved)


def build_overlap_pairs(size: int, seed: int, jaccard: float) -> list[OverlapPair]:
    return [build_overlap_pair(jaccard, seed, i) for i in range(size)]


# ---------------------------------------------------------------------------
# SFT entries


def build_sft_entries(
    size: int,
    seed: int,
    *,
    source: str = "fixture-sft",
    tokens_per_entry: int = 100,
    boxed_fraction: float = 0.0,
    think_fraction: float = 0.0,
    scored_fraction: float = 1.0,
    duplicate_fraction: float = 0.0,
) -> list[dict]:
    """SFT entries as plain JSONL-ready dicts (the posttrain module owns the type)."""
    rng = random.Random(seed)
    entries = []
    prompts = [
        f"Explique por palavras suas: {s}" for s in PT_SENTENCES
    ]
    for i in range(size):
        if entries and rng.random() < duplicate_fraction:
            prompt = entries[rng.randrange(len(entries))]["messages"][0]["content"]
        else:
            prompt = f"{prompts[i % len(prompts)]} (caso {i})"
        answer_bits = rng.sample(PT_SENTENCES, 3)
        answer = " ".join(answer_bits)
        if rng.random() < think_fraction:
            answer = f"<think>{answer_bits[0]}</think>{answer}"
        if rng.random() < boxed_fraction:
            answer = f"{answer} A resposta final é \\boxed{{{rng.randrange(1000)}}}."
        entry = {
            "id": f"{source}-{seed & 0xFFFF:04x}-{i:06d}",
            "source": source,
            "messages": [
                {"role": "user", "content": prompt},
                {"role": "assistant", "content": answer},
            ],
            "lang": "por",
            "tokens": tokens_per_entry,
        }
        if rng.random() < scored_fraction:
            entry["quality_score"] = 1.0 + 5.0 * rng.random()
        entries.append(entry)
    return entries


# ---------------------------------------------------------------------------
# mixed corpus for whole-pipeline runs


def build_pipeline_corpus(size: int, seed: int) -> list[Document]:
    """A `size`-document corpus mixing clean text with every drop category."""
    rng = random.Random(seed)
    portion = size // 10
    clean_count = size - 5 * portion
    if portion < 1 or clean_count < 1:
        portion, clean_count = 0, size
    clean = build_portuguese_paragraphs(clean_count, seed)
    if portion == 0:
        rng.shuffle(clean)
        return clean
    noisy_rep = build_repetition_text(portion, seed + 1)
    english = []
    for i in range(portion):
        sentences = rng.sample(EN_SENTENCES, 8)
        english.append(
            Document(
                id=f"en-{seed:x}-{i:05d}",
                text=" ".join(sentences[:4]) + "\n\n" + " ".join(sentences[4:]),
                source_url=f"https://example{i % 4}.com/page/{i}",
            )
        )
    shorties = [
        Document(
            id=f"curto-{seed:x}-{i:05d}",
            text=rng.choice(PT_SENTENCES).split(",")[0] + ".",
            source_url=f"https://curto.pt/{i}",
        )
        for i in range(portion)
    ]
    br_urls = [
        Document(
            id=f"br-{seed:x}-{i:05d}",
            text=clean[i % len(clean)].text,
            source_url=f"https://portal{i}.com.br/noticia/{i}",
        )
        for i in range(portion)
    ]
    near_dupes = []
    for i in range(portion):
        src = clean[i % len(clean)]
        near_dupes.append(
            Document(
                id=f"dup-{seed:x}-{i:05d}",
                text=src.text + "\n\n" + rng.choice(PT_SENTENCES),
                source_url=f"https://copia.pt/{i}",
            )
        )
    docs = clean + noisy_rep + english + shorties + br_urls + near_dupes
    rng.shuffle(docs)
    return docs


def build_quality_scores(docs: Sequence[Document], seed: int) -> dict[str, float]:
    """Deterministic pseudo-classifier scores in [0, 1] keyed by document id."""
    scores = {}
    for doc in docs:
        rng = random.Random(f"{seed}:{doc.id}")
        scores[doc.id] = round(rng.random(), 6)
    return scores


# ---------------------------------------------------------------------------
# file materialization


def generate_fixture(spec: FixtureSpec, out_dir: str | Path) -> list[Path]:
    """Write the fixture described by `spec` under out_dir; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{spec.kind.value.lower()}-{spec.seed:x}"
    if spec.kind is FixtureKind.WARC_MINIMAL:
        path = out / f"{stem}.warc"
        path.write_bytes(build_warc_minimal(spec.size, spec.seed))
        return [path]
    if spec.kind is FixtureKind.PORTUGUESE_PARAGRAPHS:
        path = out / f"{stem}.jsonl"
        with path.open("w", encoding="utf-8") as fh:
            write_documents(build_portuguese_paragraphs(spec.size, spec.seed), fh)
        return [path]
    if spec.kind is FixtureKind.REPETITION_TEXT:
        path = out / f"{stem}.jsonl"
        with path.open("w", encoding="utf-8") as fh:
            write_documents(build_repetition_text(spec.size, spec.seed), fh)
        return [path]
    if spec.kind is FixtureKind.PII_CASES:
        path = out / f"{stem}.txt"
        cases = [c.text for c in PII_CASES[: spec.size]]
        path.write_text("\n".join(cases) + "\n", encoding="utf-8")
        return [path]
    if spec.kind is FixtureKind.OVERLAP_PAIRS:
        path = out / f"{stem}.txt"
        lines = []
        for pair in build_overlap_pairs(spec.size, spec.seed, spec.jaccard or 0.0):
            lines.append(" ".join(sorted(pair.set_a)))
            lines.append(" ".join(sorted(pair.set_b)))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return [path]
    if spec.kind is FixtureKind.SFT_ENTRIES:
        import json

        path = out / f"{stem}.jsonl"
        with path.open("w", encoding="utf-8") as fh:
            for entry in build_sft_entries(spec.size, spec.seed):
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        return [path]
    raise ConfigError(f"unhandled fixture kind: {spec.kind}")
