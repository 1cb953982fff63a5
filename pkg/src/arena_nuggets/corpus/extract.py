"""Main-content extraction from HTML: boilerplate out, headings and paragraphs in order.

Built on the stdlib parser so extraction is deterministic and dependency
free; the golden-file fixtures in the test suite pin the exact behavior.
"""

from __future__ import annotations

import logging
import re
from html.parser import HTMLParser

logger = logging.getLogger(__name__)

# Subtrees that never contribute readable content.
_DROP_TAGS = {
    "script", "style", "noscript", "template", "head", "title", "meta", "link",
    "nav", "header", "footer", "aside", "form", "button", "select", "option",
    "datalist", "label", "iframe", "object", "embed", "svg", "canvas", "audio",
    "video", "map", "area", "menu", "dialog",
}

# Elements that terminate the current text block.
_BLOCK_TAGS = {
    "p", "div", "section", "article", "main", "body", "blockquote", "pre",
    "h1", "h2", "h3", "h4", "h5", "h6", "ul", "ol", "li", "dl", "dt", "dd",
    "table", "thead", "tbody", "tr", "td", "th", "figcaption", "summary",
    "details", "address", "hr", "br",
}

_VOID_TAGS = {"br", "hr", "img", "input", "meta", "link", "area", "base", "col",
              "embed", "source", "track", "wbr"}

# class/id substrings that mark chrome rather than content.
_BOILERPLATE_ATTR = re.compile(
    r"(?:^|[\s_-])(?:nav|navbar|menu|footer|header|sidebar|breadcrumb|cookie|"
    r"banner|advert|ads|promo|social|share|comment|related|popup|modal)(?:$|[\s_-])",
    re.IGNORECASE,
)

_HTML_CONTENT_TYPES = ("text/html", "application/xhtml+xml", "application/xhtml")

_META_CHARSET = re.compile(
    rb"""<meta[^>]+charset\s*=\s*["']?\s*([a-zA-Z0-9_.:-]+)""", re.IGNORECASE
)


class _MainTextParser(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.blocks: list[str] = []
        self._buf: list[str] = []
        self._skip_depth = 0
        self._stack: list[tuple[str, bool]] = []  # (tag, counts toward skip)

    def _flush(self) -> None:
        text = re.sub(r"\s+", " ", "".join(self._buf)).strip()
        self._buf = []
        if text:
            self.blocks.append(text)

    def handle_starttag(self, tag, attrs):
        if tag in _VOID_TAGS:
            if tag in ("br", "hr") and self._skip_depth == 0:
                self._flush()
            return
        skip = tag in _DROP_TAGS
        if not skip and tag in ("div", "section", "ul", "ol", "span", "table"):
            joined = " ".join(v or "" for k, v in attrs if k in ("class", "id", "role"))
            if joined and _BOILERPLATE_ATTR.search(joined):
                skip = True
        if skip or self._skip_depth:
            if self._skip_depth == 0:
                self._flush()
            self._skip_depth += 1
            self._stack.append((tag, True))
            return
        if tag in _BLOCK_TAGS:
            self._flush()
        self._stack.append((tag, False))

    def handle_endtag(self, tag):
        if tag in _VOID_TAGS:
            return
        # Tolerate unbalanced markup: pop back to the nearest matching open tag.
        for i in range(len(self._stack) - 1, -1, -1):
            if self._stack[i][0] == tag:
                for name, counted in self._stack[i:]:
                    if counted:
                        self._skip_depth -= 1
                    elif name in _BLOCK_TAGS and self._skip_depth == 0:
                        self._flush()
                del self._stack[i:]
                break

    def handle_data(self, data):
        if self._skip_depth == 0 and data:
            self._buf.append(data)

    def close(self):
        super().close()
        self._flush()


def _decode(html: bytes, content_type: str) -> str | None:
    candidates: list[str] = []
    match = re.search(r"charset=([a-zA-Z0-9_.:-]+)", content_type or "")
    if match:
        candidates.append(match.group(1))
    meta = _META_CHARSET.search(html[:4096])
    if meta:
        candidates.append(meta.group(1).decode("ascii", "ignore"))
    candidates.extend(["utf-8", "cp1252"])
    for name in candidates:
        try:
            return html.decode(name)
        except (UnicodeDecodeError, LookupError):
            continue
    return None


def extract_main_text(html: bytes, content_type: str = "") -> str:
    """Extract readable text from an HTML payload.

    Navigation, scripts, styles, and other chrome are dropped; headings and
    paragraphs come out as newline-separated blocks in document order.
    Non-HTML content types yield "" (we only scrape HTML), as does input
    that cannot be decoded or parsed.
    """
    if not html:
        return ""
    if content_type:
        base = content_type.split(";", 1)[0].strip().lower()
        if base and not any(base.startswith(t) for t in _HTML_CONTENT_TYPES):
            return ""
    if b"\x00" in html[:1024]:
        logger.warning("binary payload (NUL bytes), skipping extraction")
        return ""
    text = _decode(html, content_type)
    if text is None:
        logger.warning("could not decode payload in any candidate charset")
        return ""
    parser = _MainTextParser()
    try:
        parser.feed(text)
        parser.close()
    except Exception as exc:  # stdlib parser very rarely throws, but never crash the crawl
        logger.warning("HTML parse failed: %s", exc)
        return ""
    return "\n".join(parser.blocks)
