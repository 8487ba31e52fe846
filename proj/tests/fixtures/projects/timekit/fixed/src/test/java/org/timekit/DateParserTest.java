package org.timekit;

import static org.junit.Assert.assertEquals;
import static org.junit.Assert.assertFalse;
import static org.junit.Assert.assertTrue;

import org.junit.Test;

public class DateParserTest {

    @Test
    public void testParseIsoDate() {
        DateParser parser = new DateParser("yyyy-MM-dd");
        SimpleDate date = parser.parse("2011-01-03");
        assertEquals(2011, date.getYear());
        assertEquals(1, date.getMonth());
        assertEquals(3, date.getDay());
    }

    @Test
    public void testParseWeekDate() {
        DateParser parser = new DateParser("xxxx-'W'ww");
        assertEquals(new SimpleDate(2011, 1, 3), parser.parse("2011-W01"));
    }

    @Test
    public void testLeapYear() {
        assertTrue(SimpleDate.isLeapYear(2012));
        assertFalse(SimpleDate.isLeapYear(1900));
    }
}
